#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "mvae/checkpoint.hpp"
#include "mvae/classifier.hpp"
#include "mvae/config.hpp"
#include "mvae/dataset.hpp"
#include "mvae/embed_net.hpp"
#include "mvae/errors.hpp"
#include "mvae/gradcheck.hpp"
#include "mvae/matrix_io.hpp"
#include "mvae/model.hpp"
#include "mvae/rng.hpp"
#include "mvae/trainer.hpp"
#include "mvae/wasserstein.hpp"

using namespace mvae;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("mvae_model_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

// Central-difference derivative of f at one matrix entry.
double fd_entry(Matrix& m, std::size_t idx, const std::function<double()>& f,
                double h = 1e-6) {
    const double saved = m.data()[idx];
    m.data()[idx] = saved + h;
    const double hi = f();
    m.data()[idx] = saved - h;
    const double lo = f();
    m.data()[idx] = saved;
    return (hi - lo) / (2.0 * h);
}

double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.d_img = 6;
    cfg.embed_hidden = 8;
    cfg.d_attr_embed = 5;
    cfg.vae_hidden = 10;
    cfg.latent = 3;
    cfg.batch = 5;
    cfg.alpha = 1.3;
    cfg.gamma = 0.7;
    cfg.beta = 0.9;
    return cfg;
}

}  // namespace

TEST_CASE("embedding net forward matches hand arithmetic") {
    SeededRng rng(1);
    DeepEmbeddingNet net(2, 2, 2, rng, true);
    net.layer1.weight = Matrix::from_rows({{1, 0}, {0, 1}});
    net.layer1.bias = Matrix::from_rows({{0, 0}});
    net.layer2.weight = Matrix::from_rows({{1, -1}, {2, 1}});
    net.layer2.bias = Matrix::from_rows({{0.5, -3}});

    Matrix x = Matrix::from_rows({{1, 2}});
    Matrix y = net.forward(x);
    // Hidden layer passes [1, 2] through unchanged; the second layer
    // produces [-0.5, 1], and the final relu clips the negative entry.
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 1.0);

    net.final_relu = false;
    Matrix y2 = net.forward(x);
    CHECK(y2(0, 0) == -0.5);
    CHECK(y2(0, 1) == 1.0);
}

TEST_CASE("embedding net with zero weights maps everything to zero") {
    SeededRng rng(2);
    DeepEmbeddingNet net(3, 4, 2, rng, true);
    net.layer1.weight.fill(0.0);
    net.layer1.bias.fill(0.0);
    net.layer2.weight.fill(0.0);
    net.layer2.bias.fill(0.0);
    SeededRng data_rng(3);
    Matrix y = net.forward(gaussian_sample(data_rng, 4, 3));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.0);
}

TEST_CASE("final relu controls the sign of the embedding") {
    SeededRng rng(4);
    DeepEmbeddingNet relu_net(3, 6, 4, rng, true);
    SeededRng rng2(4);
    DeepEmbeddingNet free_net(3, 6, 4, rng2, false);
    SeededRng data_rng(5);
    Matrix attrs = gaussian_sample(data_rng, 20, 3);
    Matrix clipped = relu_net.forward(attrs);
    Matrix open = free_net.forward(attrs);
    double min_clipped = 1e300;
    double min_open = 1e300;
    for (std::size_t i = 0; i < clipped.size(); ++i) {
        min_clipped = std::min(min_clipped, clipped.data()[i]);
        min_open = std::min(min_open, open.data()[i]);
    }
    CHECK(min_clipped >= 0.0);
    CHECK(min_open < 0.0);
}

TEST_CASE("embedding net backward agrees with finite differences") {
    SeededRng rng(6);
    DeepEmbeddingNet net(3, 5, 4, rng, true);
    SeededRng data_rng(7);
    Matrix attrs = gaussian_sample(data_rng, 6, 3);
    Matrix coef = gaussian_sample(data_rng, 6, 4);

    auto probe = [&]() {
        Matrix y = net.forward(attrs);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += coef.data()[i] * y.data()[i];
        return s;
    };

    probe();
    Matrix d_attr = net.backward(coef);

    std::vector<std::pair<Matrix*, const Matrix*>> blocks = {
        {&net.layer1.weight, &net.layer1.grad_weight},
        {&net.layer1.bias, &net.layer1.grad_bias},
        {&net.layer2.weight, &net.layer2.grad_weight},
        {&net.layer2.bias, &net.layer2.grad_bias},
    };
    for (auto& [value, grad] : blocks) {
        for (std::size_t i = 0; i < value->size(); ++i) {
            const double numeric = fd_entry(*value, i, probe);
            CHECK(rel_err(grad->data()[i], numeric) < 1e-6);
        }
    }
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        const double numeric = fd_entry(attrs, i, probe);
        CHECK(rel_err(d_attr.data()[i], numeric) < 1e-6);
    }
}

TEST_CASE("embed_rows_for_labels gathers per-sample rows") {
    SeededRng rng(8);
    DeepEmbeddingNet net(3, 4, 4, rng, true);
    SeededRng data_rng(9);
    Matrix attributes = gaussian_sample(data_rng, 3, 3);
    Matrix table = net.forward(attributes);

    Matrix repeated = embed_rows_for_labels(net, attributes, {2, 2, 2});
    REQUIRE(repeated.rows() == 3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t j = 0; j < 4; ++j) CHECK(repeated(r, j) == table(2, j));

    Matrix permuted = embed_rows_for_labels(net, attributes, {2, 0, 1});
    CHECK(permuted(0, 0) == table(2, 0));
    CHECK(permuted(1, 0) == table(0, 0));
    CHECK(permuted(2, 0) == table(1, 0));

    CHECK_THROWS_AS(embed_rows_for_labels(net, attributes, {5}), IndexError);
}

TEST_CASE("build_combined and split_combined invert each other") {
    Matrix x = Matrix::from_rows({{1, 2}});
    Matrix sem = Matrix::from_rows({{3}});
    Matrix combined = build_combined(x, sem);
    REQUIRE(combined.cols() == 3);
    CHECK(combined(0, 0) == 1.0);
    CHECK(combined(0, 1) == 2.0);
    CHECK(combined(0, 2) == 3.0);

    auto [x2, sem2] = split_combined(combined, 2);
    CHECK(max_abs_diff(x, x2) == 0.0);
    CHECK(max_abs_diff(sem, sem2) == 0.0);

    SeededRng rng(10);
    Matrix a = gaussian_sample(rng, 4, 7);
    Matrix b = gaussian_sample(rng, 4, 3);
    auto [a2, b2] = split_combined(build_combined(a, b), 7);
    CHECK(max_abs_diff(a, a2) == 0.0);
    CHECK(max_abs_diff(b, b2) == 0.0);

    Matrix mismatched = gaussian_sample(rng, 5, 3);
    CHECK_THROWS_AS(build_combined(a, mismatched), ShapeError);
}

TEST_CASE("encoder clamps logvar to the documented range") {
    SeededRng rng(11);
    VaePair pair(2, 3, 2, rng);
    pair.logvar_head.weight.fill(0.0);
    pair.logvar_head.bias(0, 0) = 1000.0;
    pair.logvar_head.bias(0, 1) = -1000.0;
    Matrix x = Matrix::from_rows({{0.3, -0.2}});
    LatentDistribution dist = pair.encode(x);
    CHECK(dist.logvar(0, 0) == LOGVAR_CLAMP);
    CHECK(dist.logvar(0, 1) == -LOGVAR_CLAMP);
}

TEST_CASE("reparameterize matches its closed form") {
    LatentDistribution dist;
    dist.mu = Matrix::from_rows({{1, 2}});
    dist.logvar = Matrix::from_rows({{0.0, 2.0 * std::log(2.0)}});

    Matrix zero_eps(1, 2, 0.0);
    Matrix z0 = reparameterize(dist, zero_eps);
    CHECK(z0(0, 0) == 1.0);
    CHECK(z0(0, 1) == 2.0);

    Matrix one_eps(1, 2, 1.0);
    Matrix z1 = reparameterize(dist, one_eps);
    CHECK(z1(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(z1(0, 1) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("reconstruction loss is the mean absolute error") {
    Matrix a = Matrix::from_rows({{1, 2}});
    Matrix b = Matrix::from_rows({{0, 4}});
    CHECK(reconstruction_loss(a, b) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(reconstruction_loss(b, a) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(reconstruction_loss(a, a) == 0.0);
    CHECK_THROWS_AS(reconstruction_loss(a, Matrix(2, 2, 0.0)), ShapeError);
}

TEST_CASE("kl divergence closed form on pinned points") {
    LatentDistribution standard;
    standard.mu = Matrix(2, 3, 0.0);
    standard.logvar = Matrix(2, 3, 0.0);
    CHECK(kl_divergence(standard) == 0.0);

    LatentDistribution shifted;
    shifted.mu = Matrix(4, 5, 1.0);
    shifted.logvar = Matrix(4, 5, 0.0);
    CHECK(kl_divergence(shifted) == doctest::Approx(0.5 * 5).epsilon(1e-12));

    // Batch mean: one standard row and one shifted row, 3 latent dims.
    LatentDistribution mixed;
    mixed.mu = Matrix::from_rows({{0, 0, 0}, {1, 1, 1}});
    mixed.logvar = Matrix(2, 3, 0.0);
    CHECK(kl_divergence(mixed) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("kl divergence matches a Monte Carlo estimate") {
    LatentDistribution dist;
    dist.mu = Matrix::from_rows({{0.3, -0.7}});
    dist.logvar = Matrix::from_rows({{0.4, -0.3}});
    const double closed = kl_divergence(dist);

    SeededRng rng(12);
    const int n = 200000;
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < 2; ++j) {
            const double eps = rng.next_normal();
            const double sd = std::exp(dist.logvar(0, j) / 2.0);
            const double z = dist.mu(0, j) + sd * eps;
            acc += 0.5 * (z * z - eps * eps - dist.logvar(0, j));
        }
    }
    const double mc = acc / n;
    CHECK(std::abs(mc - closed) / closed < 0.02);
}

TEST_CASE("wasserstein distance is zero between identical batches") {
    SeededRng rng(13);
    Matrix a = gaussian_sample(rng, 6, 4);
    CHECK(wasserstein2(a, a, WassersteinMode::quantile_1d) == 0.0);
    CHECK(wasserstein2(a, a, WassersteinMode::gaussian_diag) == 0.0);
}

TEST_CASE("wasserstein distance of a pure translation is the shift") {
    SeededRng rng(14);
    Matrix a = gaussian_sample(rng, 8, 1);
    const double c = 2.75;
    Matrix b = a;
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] += c;
    CHECK(wasserstein2(a, b, WassersteinMode::quantile_1d) ==
          doctest::Approx(c).epsilon(1e-9));
    CHECK(wasserstein2(a, b, WassersteinMode::gaussian_diag) ==
          doctest::Approx(c).epsilon(1e-9));
    Matrix neg = a;
    for (std::size_t i = 0; i < neg.size(); ++i) neg.data()[i] -= c;
    CHECK(wasserstein2(a, neg, WassersteinMode::quantile_1d) ==
          doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("quantile mode tracks the sorted-pairing oracle") {
    for (std::uint64_t seed = 100; seed < 104; ++seed) {
        SeededRng rng(seed);
        const std::size_t n = 200;
        Matrix a = gaussian_sample(rng, n, 1);
        Matrix b = gaussian_sample(rng, n, 1);
        for (std::size_t i = 0; i < n; ++i) b.data()[i] = 0.6 * b.data()[i] + 0.9;

        std::vector<double> sa(a.data(), a.data() + n);
        std::vector<double> sb(b.data(), b.data() + n);
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = sa[i] - sb[i];
            acc += d * d;
        }
        const double oracle = std::sqrt(acc / n);
        const double got = wasserstein2(a, b, WassersteinMode::quantile_1d);
        CHECK(std::abs(got - oracle) / oracle < 0.02);
    }
}

TEST_CASE("gaussian mode reproduces a hand-computed moment distance") {
    Matrix a = Matrix::from_rows({{1}, {3}});
    Matrix b = Matrix::from_rows({{5}, {5}});
    // Means 2 and 5, population sds 1 and 0.
    CHECK(wasserstein2(a, b, WassersteinMode::gaussian_diag) ==
          doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("gaussian mode rejects mismatched widths with guidance") {
    Matrix a(3, 4, 0.5);
    Matrix b(3, 5, 0.5);
    CHECK_THROWS_AS(wasserstein2(a, b, WassersteinMode::gaussian_diag), ShapeError);
    const std::string msg = error_text(
        [&] { wasserstein2(a, b, WassersteinMode::gaussian_diag); });
    CHECK(msg.find("aligned") != std::string::npos);
    // The pooled quantile mode accepts the same pair.
    CHECK(wasserstein2(a, b, WassersteinMode::quantile_1d) == 0.0);
}

TEST_CASE("wasserstein gradients agree with finite differences") {
    for (WassersteinMode mode :
         {WassersteinMode::quantile_1d, WassersteinMode::gaussian_diag}) {
        SeededRng rng(static_cast<std::uint64_t>(mode) + 40);
        Matrix a = gaussian_sample(rng, 4, 3);
        Matrix b = gaussian_sample(rng, 5, 3);
        for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] += 0.4;

        WassersteinGrad g = wasserstein2_with_grads(a, b, mode);
        CHECK(g.value == doctest::Approx(wasserstein2(a, b, mode)).epsilon(1e-12));

        auto probe_val = [&]() { return wasserstein2(a, b, mode); };
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double numeric = fd_entry(a, i, probe_val);
            CHECK(rel_err(g.grad_a.data()[i], numeric) < 1e-4);
        }
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double numeric = fd_entry(b, i, probe_val);
            CHECK(rel_err(g.grad_b.data()[i], numeric) < 1e-4);
        }
    }
}

TEST_CASE("wasserstein gradients vanish at zero distance") {
    SeededRng rng(15);
    Matrix a = gaussian_sample(rng, 5, 2);
    for (WassersteinMode mode :
         {WassersteinMode::quantile_1d, WassersteinMode::gaussian_diag}) {
        WassersteinGrad g = wasserstein2_with_grads(a, a, mode);
        CHECK(g.value == 0.0);
        for (std::size_t i = 0; i < g.grad_a.size(); ++i) {
            CHECK(g.grad_a.data()[i] == 0.0);
            CHECK(g.grad_b.data()[i] == 0.0);
        }
    }
}

TEST_CASE("total loss composes its three weighted terms") {
    SeededRng rng(16);
    Matrix original = gaussian_sample(rng, 4, 6);
    Matrix reconstructed = gaussian_sample(rng, 4, 6);
    LatentDistribution dist;
    dist.mu = gaussian_sample(rng, 4, 3);
    dist.logvar = gaussian_sample(rng, 4, 3);
    Matrix x_batch = gaussian_sample(rng, 4, 6);
    Matrix sem_batch = gaussian_sample(rng, 4, 6);

    LossWeights w;
    w.alpha = 2.0;
    w.gamma = 3.0;
    w.beta = 1.0;
    LossBreakdown out = total_loss(original, reconstructed, dist, w, x_batch, sem_batch,
                                   WassersteinMode::gaussian_diag);
    const double recon = reconstruction_loss(original, reconstructed);
    const double kl = kl_divergence(dist);
    const double wass =
        wasserstein2(x_batch, sem_batch, WassersteinMode::gaussian_diag);
    CHECK(out.recon == doctest::Approx(recon).epsilon(1e-15));
    CHECK(out.kl == doctest::Approx(kl).epsilon(1e-15));
    CHECK(out.wass == doctest::Approx(wass).epsilon(1e-15));
    CHECK(out.total ==
          doctest::Approx(2.0 * recon + 3.0 * wass + 1.0 * kl).epsilon(1e-12));
}

TEST_CASE("gamma zero skips the distance term entirely") {
    SeededRng rng(17);
    Matrix original = gaussian_sample(rng, 3, 4);
    Matrix reconstructed = gaussian_sample(rng, 3, 4);
    LatentDistribution dist;
    dist.mu = gaussian_sample(rng, 3, 2);
    dist.logvar = gaussian_sample(rng, 3, 2);
    Matrix x_batch = gaussian_sample(rng, 3, 4);
    // Width differs from x_batch, which gaussian-diag would reject.
    Matrix sem_batch = gaussian_sample(rng, 3, 7);

    LossWeights w;
    w.gamma = 0.0;
    LossBreakdown g1 = total_loss(original, reconstructed, dist, w, x_batch, sem_batch,
                                  WassersteinMode::gaussian_diag);
    LossBreakdown g2 = total_loss(original, reconstructed, dist, w, x_batch, sem_batch,
                                  WassersteinMode::quantile_1d);
    CHECK(g1.wass == 0.0);
    CHECK(g2.wass == 0.0);
    CHECK(g1.total == g2.total);
    CHECK(g1.recon == g2.recon);
    CHECK(g1.kl == g2.kl);
}

TEST_CASE("full objective passes a gradient check in every variant") {
    struct Setup {
        const char* variant;
        const char* mode;
        std::size_t d_attr_embed;
    };
    const Setup setups[] = {
        {"mvae", "quantile-1d", 5},
        {"mvae", "gaussian-diag", 6},
        {"baseline1", "quantile-1d", 5},
        {"baseline2", "quantile-1d", 5},
        {"baseline2", "gaussian-diag", 6},
    };
    for (const Setup& s : setups) {
        CAPTURE(s.variant);
        CAPTURE(s.mode);
        ModelConfig cfg = tiny_config();
        cfg.variant = s.variant;
        cfg.wasserstein_mode = s.mode;
        cfg.d_attr_embed = s.d_attr_embed;
        if (cfg.variant == std::string("baseline1")) cfg.gamma = 0.0;

        const std::size_t d_attr = 4;
        SeededRng root(77);
        SeededRng init = root.substream(TAG_MODEL_INIT);
        MvaeModel model(cfg, d_attr, init);

        SeededRng data_rng(78);
        Matrix x = gaussian_sample(data_rng, cfg.batch, cfg.d_img);
        Matrix attr_rows = gaussian_sample(data_rng, cfg.batch, d_attr);
        Matrix eps_main = gaussian_sample(data_rng, cfg.batch, cfg.latent);
        Matrix eps_sem = gaussian_sample(data_rng, cfg.batch, cfg.latent);

        LossWeights weights{cfg.alpha, cfg.gamma, cfg.beta};
        MvaeObjectiveMap map(model, attr_rows, weights,
                             wasserstein_mode_from_string(cfg.wasserstein_mode),
                             eps_main, eps_sem);
        GradCheckReport report = gradient_check(map, x, 1e-4);
        CHECK(report.all_passed());
        CHECK(report.worst_rel_error() < 1e-4);
    }
}

TEST_CASE("trainer reduces the loss on synthetic data") {
    SyntheticSpec spec;
    spec.seen_classes = 4;
    spec.novel_classes = 2;
    spec.samples_per_class = 10;
    spec.d_img = 8;
    spec.d_attr = 4;
    spec.seed = 21;
    FeatureDataset ds = generate_synthetic(spec);

    ModelConfig cfg = tiny_config();
    cfg.d_img = 8;
    cfg.batch = 10;
    cfg.alpha = 1.0;
    cfg.gamma = 0.5;
    cfg.beta = 0.1;

    SeededRng root(99);
    SeededRng init = root.substream(TAG_MODEL_INIT);
    MvaeModel model(cfg, 4, init);
    Trainer trainer(model, cfg, root);
    const double first = trainer.train_epoch(ds).total;
    double last = first;
    for (int e = 1; e < 30; ++e) last = trainer.train_epoch(ds).total;
    CHECK(last < first);
    CHECK(last < 0.7 * first);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
    SyntheticSpec spec;
    spec.seen_classes = 3;
    spec.novel_classes = 1;
    spec.samples_per_class = 8;
    spec.d_img = 6;
    spec.d_attr = 3;
    spec.seed = 22;
    FeatureDataset ds = generate_synthetic(spec);

    ModelConfig cfg = tiny_config();
    cfg.batch = 8;

    auto run = [&]() {
        SeededRng root(123);
        SeededRng init = root.substream(TAG_MODEL_INIT);
        MvaeModel model(cfg, 3, init);
        Trainer trainer(model, cfg, root);
        std::vector<double> losses;
        for (int e = 0; e < 3; ++e) losses.push_back(trainer.train_epoch(ds).total);
        return losses;
    };
    std::vector<double> a = run();
    std::vector<double> b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("pure reconstruction training trends down in block means") {
    SyntheticSpec spec;
    spec.seen_classes = 3;
    spec.novel_classes = 1;
    spec.samples_per_class = 12;
    spec.d_img = 6;
    spec.d_attr = 3;
    spec.seed = 23;
    FeatureDataset ds = generate_synthetic(spec);

    ModelConfig cfg = tiny_config();
    cfg.alpha = 1.0;
    cfg.gamma = 0.0;
    cfg.beta = 0.0;
    cfg.batch = 36;

    SeededRng root(55);
    SeededRng init = root.substream(TAG_MODEL_INIT);
    MvaeModel model(cfg, 3, init);
    Trainer trainer(model, cfg, root);
    std::vector<double> recon;
    for (int e = 0; e < 60; ++e) recon.push_back(trainer.train_epoch(ds).recon);
    // Single-epoch values jitter with the sampling noise, so compare
    // block means instead of adjacent epochs.
    auto block_mean = [&](std::size_t from, std::size_t to) {
        double s = 0.0;
        for (std::size_t i = from; i < to; ++i) s += recon[i];
        return s / static_cast<double>(to - from);
    };
    const double head = block_mean(0, 5);
    const double mid = block_mean(27, 33);
    const double tail = block_mean(55, 60);
    CHECK(mid < head);
    CHECK(tail < mid);
    CHECK(tail < 0.85 * head);
}

TEST_CASE("checkpoint save and load round-trips bytes and flags") {
    TempDir tmp;
    ModelConfig cfg = tiny_config();
    SeededRng root(31);
    SeededRng init = root.substream(TAG_MODEL_INIT);
    MvaeModel model(cfg, 4, init);
    model.mark_trained();

    const fs::path p1 = tmp.path / "a.mvm";
    const fs::path p2 = tmp.path / "b.mvm";
    save_checkpoint(p1, model);
    MvaeModel loaded = load_checkpoint(p1);
    CHECK(loaded.trained());
    CHECK(loaded.d_attr() == 4);
    CHECK(loaded.config() == cfg);
    save_checkpoint(p2, loaded);
    CHECK(read_file_bytes(p1) == read_file_bytes(p2));

    // Loaded parameters equal the float32 projection of the originals.
    std::vector<ParamBlock> orig = model.parameter_blocks();
    std::vector<ParamBlock> back = loaded.parameter_blocks();
    REQUIRE(orig.size() == back.size());
    for (std::size_t b = 0; b < orig.size(); ++b) {
        CHECK(orig[b].name == back[b].name);
        REQUIRE(orig[b].value->size() == back[b].value->size());
        for (std::size_t i = 0; i < orig[b].value->size(); ++i) {
            CHECK(back[b].value->data()[i] == quantize_f32(orig[b].value->data()[i]));
        }
    }

    // An untrained model round-trips its flag too.
    SeededRng root2(32);
    SeededRng init2 = root2.substream(TAG_MODEL_INIT);
    MvaeModel fresh(cfg, 4, init2);
    const fs::path p3 = tmp.path / "fresh.mvm";
    save_checkpoint(p3, fresh);
    CHECK_FALSE(load_checkpoint(p3).trained());
}

TEST_CASE("checkpoint loader rejects malformed files") {
    TempDir tmp;
    ModelConfig cfg = tiny_config();
    SeededRng root(33);
    SeededRng init = root.substream(TAG_MODEL_INIT);
    MvaeModel model(cfg, 4, init);
    const fs::path good = tmp.path / "good.mvm";
    save_checkpoint(good, model);
    std::vector<std::uint8_t> bytes = read_file_bytes(good);

    {
        std::vector<std::uint8_t> bad = bytes;
        bad[0] = 'X';
        const fs::path p = tmp.path / "magic.mvm";
        write_file_bytes(p, bad);
        CHECK_THROWS_AS(load_checkpoint(p), FormatError);
    }
    {
        std::vector<std::uint8_t> bad(bytes.begin(), bytes.end() - 7);
        const fs::path p = tmp.path / "short.mvm";
        write_file_bytes(p, bad);
        CHECK_THROWS_AS(load_checkpoint(p), TruncationError);
    }
    {
        std::vector<std::uint8_t> bad = bytes;
        bad.push_back(0);
        const fs::path p = tmp.path / "long.mvm";
        write_file_bytes(p, bad);
        CHECK_THROWS_AS(load_checkpoint(p), FormatError);
    }
    {
        // Flip the echoed latent size so every record shape disagrees.
        std::string text(bytes.begin(), bytes.end());
        const std::string::size_type at = text.find("latent = 3");
        REQUIRE(at != std::string::npos);
        text[at + std::string("latent = ").size()] = '4';
        std::vector<std::uint8_t> bad(text.begin(), text.end());
        const fs::path p = tmp.path / "shape.mvm";
        write_file_bytes(p, bad);
        CHECK_THROWS_AS(load_checkpoint(p), FormatError);
        const std::string msg = error_text([&] { load_checkpoint(p); });
        CHECK(msg.find("shape") != std::string::npos);
    }
}

TEST_CASE("classifier checkpoints round-trip") {
    TempDir tmp;
    ModelConfig cfg = tiny_config();
    SeededRng rng(34);
    cfg.classifier_hidden1 = 8;
    cfg.classifier_hidden2 = 4;
    MlpClassifier clf(6, 8, 4, 5, rng);
    const fs::path p1 = tmp.path / "clf_a.mvm";
    const fs::path p2 = tmp.path / "clf_b.mvm";
    save_classifier(p1, clf, cfg);
    MlpClassifier loaded = load_classifier(p1);
    save_classifier(p2, loaded, cfg);
    CHECK(read_file_bytes(p1) == read_file_bytes(p2));

    SeededRng data_rng(35);
    Matrix x = gaussian_sample(data_rng, 3, 6);
    Matrix logits = loaded.logits(x);
    CHECK(logits.rows() == 3);
    CHECK(logits.cols() == 5);
}
