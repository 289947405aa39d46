#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "mvae/classifier.hpp"
#include "mvae/config.hpp"
#include "mvae/dataset.hpp"
#include "mvae/errors.hpp"
#include "mvae/evaluate.hpp"
#include "mvae/matrix_io.hpp"
#include "mvae/rng.hpp"
#include "mvae/trainer.hpp"

using namespace mvae;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("mvae_gzsl_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

FeatureDataset small_dataset(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.seen_classes = 3;
    spec.novel_classes = 2;
    spec.samples_per_class = 10;
    spec.d_img = 8;
    spec.d_attr = 4;
    spec.seed = seed;
    return generate_synthetic(spec);
}

ModelConfig micro_config() {
    ModelConfig cfg;
    cfg.d_img = 8;
    cfg.embed_hidden = 6;
    cfg.d_attr_embed = 8;
    cfg.vae_hidden = 10;
    cfg.latent = 4;
    cfg.epochs = 3;
    cfg.batch = 10;
    cfg.n_syn_per_novel = 20;
    cfg.classifier_hidden1 = 16;
    cfg.classifier_hidden2 = 8;
    cfg.classifier_epochs = 10;
    cfg.wasserstein_mode = "gaussian-diag";
    cfg.embed_final_relu = false;
    return cfg;
}

}  // namespace

TEST_CASE("harmonic mean closed form") {
    CHECK(harmonic_mean(0.4, 0.4) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(harmonic_mean(73.0, 73.0) == doctest::Approx(73.0).epsilon(1e-15));
    CHECK(harmonic_mean(0.0, 40.0) == 0.0);
    CHECK(harmonic_mean(40.0, 0.0) == 0.0);
    CHECK(harmonic_mean(0.0, 0.0) == 0.0);
    CHECK_THROWS_AS(harmonic_mean(-0.1, 0.5), DomainError);
    CHECK_THROWS_AS(harmonic_mean(0.5, -2.0), DomainError);
}

TEST_CASE("harmonic mean reference pairs") {
    CHECK(std::abs(harmonic_mean(62.9, 57.1) - 59.85) < 0.01);
    CHECK(std::abs(harmonic_mean(58.74, 42.37) - 49.22) < 0.02);
    CHECK(std::abs(harmonic_mean(78.3, 62.1) - 69.26) < 0.01);
    CHECK(std::abs(harmonic_mean(72.41, 61.3) - 66.39) < 0.02);
    // The same pairs on the unit scale agree after dividing by 100.
    CHECK(harmonic_mean(0.629, 0.571) ==
          doctest::Approx(harmonic_mean(62.9, 57.1) / 100.0).epsilon(1e-12));
}

TEST_CASE("harmonic mean is bounded by its inputs") {
    SeededRng rng(61);
    for (int i = 0; i < 200; ++i) {
        const double s = rng.next_uniform();
        const double n = rng.next_uniform();
        const double h = harmonic_mean(s, n);
        CHECK(h <= std::max(s, n) + 1e-12);
        CHECK(h <= 2.0 * std::min(s, n) + 1e-12);
        CHECK(h >= 0.0);
    }
}

TEST_CASE("score_predictions averages per class, not per sample") {
    // Seen split: class 0 scores 2/2, class 1 scores 1/2.
    std::vector<std::uint32_t> seen_labels = {0, 0, 1, 1};
    std::vector<std::uint32_t> seen_preds = {0, 0, 1, 3};
    // Novel split: class 2 scores 1/1.
    std::vector<std::uint32_t> novel_labels = {2};
    std::vector<std::uint32_t> novel_preds = {2};
    GzslMetrics m = score_predictions(seen_labels, seen_preds, novel_labels, novel_preds);
    CHECK(m.seen_acc == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m.novel_acc == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.harmonic_mean == doctest::Approx(harmonic_mean(0.75, 1.0)).epsilon(1e-12));

    // Duplicating one class's samples must not move the per-class mean.
    std::vector<std::uint32_t> dup_labels = {0, 0, 0, 0, 0, 0, 1, 1};
    std::vector<std::uint32_t> dup_preds = {0, 0, 0, 0, 0, 0, 1, 3};
    GzslMetrics d = score_predictions(dup_labels, dup_preds, novel_labels, novel_preds);
    CHECK(d.seen_acc == doctest::Approx(0.75).epsilon(1e-15));

    CHECK_THROWS_AS(score_predictions({0}, {0, 1}, {}, {}), ShapeError);
}

TEST_CASE("classify takes the argmax and breaks ties low") {
    SeededRng rng(62);
    MlpClassifier clf(3, 4, 4, 5, rng);
    SeededRng data_rng(63);
    Matrix x = gaussian_sample(data_rng, 6, 3);
    Matrix logits = clf.logits(x);
    std::vector<std::uint32_t> preds = classify(clf, x);
    REQUIRE(preds.size() == 6);
    for (std::size_t r = 0; r < 6; ++r) {
        double best = logits(r, 0);
        std::uint32_t arg = 0;
        for (std::size_t c = 1; c < 5; ++c) {
            if (logits(r, c) > best) {
                best = logits(r, c);
                arg = static_cast<std::uint32_t>(c);
            }
        }
        CHECK(preds[r] == arg);
    }

    // All-zero weights tie every logit; the lowest id must win.
    MlpClassifier flat(3, 4, 4, 5, rng);
    for (ParamBlock& b : flat.parameter_blocks()) b.value->fill(0.0);
    std::vector<std::uint32_t> tied = classify(flat, x);
    for (std::uint32_t p : tied) CHECK(p == 0);
}

TEST_CASE("classifier predictions are invariant to logit shifts") {
    SeededRng rng(64);
    MlpClassifier clf(3, 4, 4, 5, rng);
    SeededRng data_rng(65);
    Matrix x = gaussian_sample(data_rng, 8, 3);
    std::vector<std::uint32_t> before = classify(clf, x);
    // Shifting every output bias by the same constant shifts all logits
    // of a row together and cannot change any argmax.
    for (std::size_t j = 0; j < clf.layer3.bias.size(); ++j)
        clf.layer3.bias.data()[j] += 7.5;
    std::vector<std::uint32_t> after = classify(clf, x);
    CHECK(before == after);
}

TEST_CASE("classifier set construction contracts") {
    FeatureDataset ds = small_dataset(71);
    ModelConfig cfg = micro_config();

    SeededRng root(71);
    SeededRng init = root.substream(TAG_MODEL_INIT);
    MvaeModel model(cfg, 4, init);

    SeededRng build_root(72);
    CHECK_THROWS_AS(build_classifier_set(model, ds, cfg, build_root), StateError);

    model.mark_trained();
    SeededRng r1(73);
    ClassifierSet set = build_classifier_set(model, ds, cfg, r1);
    // 3 seen classes with 8 train samples each plus 2 novel classes at
    // n_syn_per_novel synthesized rows each.
    CHECK(set.labels.size() == 24 + 2 * 20);
    CHECK(set.inputs.rows() == set.labels.size());
    CHECK(set.inputs.cols() == model.combined_width());

    std::size_t novel_rows = 0;
    for (std::uint32_t c : set.labels)
        if (ds.is_novel_class(c)) ++novel_rows;
    CHECK(novel_rows == 40);

    SeededRng r2(73);
    ClassifierSet again = build_classifier_set(model, ds, cfg, r2);
    CHECK(max_abs_diff(set.inputs, again.inputs) == 0.0);
    CHECK(set.labels == again.labels);

    cfg.classifier_space = "latent";
    SeededRng r3(73);
    ClassifierSet latent_set = build_classifier_set(model, ds, cfg, r3);
    CHECK(latent_set.inputs.cols() == cfg.latent);
}

TEST_CASE("classifier training separates clean clusters") {
    const std::size_t per_class = 100;
    const std::size_t d = 8;
    SeededRng rng(81);
    ClassifierSet set;
    set.inputs = Matrix(2 * per_class, d);
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            set.inputs(i, j) = 4.0 + 0.2 * rng.next_normal();
            set.inputs(per_class + i, j) = -4.0 + 0.2 * rng.next_normal();
        }
        set.labels.push_back(0);
    }
    for (std::size_t i = 0; i < per_class; ++i) set.labels.push_back(1);

    ModelConfig cfg = micro_config();
    cfg.classifier_epochs = 20;
    SeededRng root(82);
    MlpClassifier clf = train_classifier(set, cfg, 2, root);
    std::vector<std::uint32_t> preds = classify(clf, set.inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == set.labels[i]) ++correct;
    CHECK(correct == preds.size());

    std::size_t weight_blocks = 0;
    for (ParamBlock& b : clf.parameter_blocks())
        if (b.name.find("weight") != std::string::npos) ++weight_blocks;
    CHECK(weight_blocks == 3);
}

TEST_CASE("classifier training rejects degenerate label sets") {
    ClassifierSet set;
    set.inputs = Matrix(4, 3, 0.5);
    set.labels = {2, 2, 2, 2};
    ModelConfig cfg = micro_config();
    SeededRng root(83);
    CHECK_THROWS_AS(train_classifier(set, cfg, 3, root), DegenerateDataError);

    ClassifierSet empty;
    empty.inputs = Matrix(0, 3, 0.0);
    CHECK_THROWS_AS(train_classifier(empty, cfg, 3, root), DegenerateDataError);
}

TEST_CASE("evaluation requires a trained model") {
    FeatureDataset ds = small_dataset(91);
    ModelConfig cfg = micro_config();
    SeededRng root(91);
    SeededRng init = root.substream(TAG_MODEL_INIT);
    MvaeModel model(cfg, 4, init);
    SeededRng crng(92);
    MlpClassifier clf(model.combined_width(), 4, 4, 5, crng);
    CHECK_THROWS_AS(evaluate_gzsl(model, clf, ds, cfg), StateError);
}

TEST_CASE("run_pipeline is deterministic and fills every field") {
    FeatureDataset ds = small_dataset(95);
    ModelConfig cfg = micro_config();
    PipelineRun a = run_pipeline(ds, cfg, 7);
    PipelineRun b = run_pipeline(ds, cfg, 7);
    REQUIRE(a.epoch_losses.size() == cfg.epochs);
    for (std::size_t e = 0; e < a.epoch_losses.size(); ++e) {
        CHECK(a.epoch_losses[e].total == b.epoch_losses[e].total);
        CHECK(a.epoch_losses[e].recon == b.epoch_losses[e].recon);
    }
    CHECK(a.final_metrics.seen_acc == b.final_metrics.seen_acc);
    CHECK(a.final_metrics.novel_acc == b.final_metrics.novel_acc);
    CHECK(a.final_metrics.harmonic_mean == b.final_metrics.harmonic_mean);
    CHECK(a.model.trained());
    CHECK(a.final_metrics.harmonic_mean ==
          doctest::Approx(harmonic_mean(a.final_metrics.seen_acc,
                                        a.final_metrics.novel_acc))
              .epsilon(1e-12));

    PipelineRun c = run_pipeline(ds, cfg, 8);
    bool any_difference = false;
    for (std::size_t e = 0; e < c.epoch_losses.size(); ++e)
        if (c.epoch_losses[e].total != a.epoch_losses[e].total) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("run_id is a stable function of config and seed") {
    ModelConfig cfg = micro_config();
    const std::string id1 = make_run_id(cfg, 7);
    const std::string id2 = make_run_id(cfg, 7);
    CHECK(id1 == id2);
    CHECK_FALSE(id1.empty());
    CHECK(make_run_id(cfg, 8) != id1);
    ModelConfig other = cfg;
    other.alpha = cfg.alpha + 1.0;
    CHECK(make_run_id(other, 7) != id1);
}

TEST_CASE("ablation emits three ordered variants deterministically") {
    TempDir tmp;
    FeatureDataset ds = small_dataset(99);
    ModelConfig cfg = micro_config();

    const fs::path csv1 = tmp.path / "a.csv";
    std::vector<GzslMetrics> rows = run_ablation(ds, cfg, 5, csv1);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].variant == "mvae");
    CHECK(rows[1].variant == "baseline1");
    CHECK(rows[2].variant == "baseline2");
    CHECK(rows[1].loss_wass == 0.0);

    const fs::path csv2 = tmp.path / "b.csv";
    run_ablation(ds, cfg, 5, csv2);
    CHECK(read_file_bytes(csv1) == read_file_bytes(csv2));

    std::vector<GzslMetrics> parsed = read_metrics_csv(csv1);
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[0].variant == "mvae");

    ModelConfig b1 = ablation_variant_config(cfg, "baseline1");
    CHECK(b1.gamma == 0.0);
    CHECK(b1.variant == "baseline1");
    ModelConfig b2 = ablation_variant_config(cfg, "baseline2");
    CHECK(b2.variant == "baseline2");
    CHECK_THROWS_AS(variant_from_string("nonsense"), ConfigError);
}
