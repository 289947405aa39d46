#include "mvae/trainer.hpp"

#include <cmath>

#include "mvae/errors.hpp"
#include "mvae/wasserstein.hpp"

namespace mvae {

namespace {

double sign_of(double d) {
    if (d > 0.0) return 1.0;
    if (d < 0.0) return -1.0;
    return 0.0;
}

// d recon and d target of alpha * MAE(target, recon), both batch means.
void mae_grads(const Matrix& target, const Matrix& recon, double alpha,
               Matrix& d_recon, Matrix& d_target) {
    const double scale = alpha / static_cast<double>(target.size());
    d_recon = Matrix(target.rows(), target.cols());
    d_target = Matrix(target.rows(), target.cols());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double s = sign_of(recon.data()[i] - target.data()[i]);
        d_recon.data()[i] = scale * s;
        d_target.data()[i] = -scale * s;
    }
}

// Adds the KL gradients for beta * KL(dist || N(0, I)) onto d_mu and
// d_logvar, both already holding the reconstruction path.
void add_kl_grads(const LatentDistribution& dist, double beta, Matrix& d_mu,
                  Matrix& d_logvar) {
    const double inv_batch = 1.0 / static_cast<double>(dist.mu.rows());
    for (std::size_t i = 0; i < dist.mu.size(); ++i) {
        d_mu.data()[i] += beta * dist.mu.data()[i] * inv_batch;
        d_logvar.data()[i] +=
            beta * 0.5 * (std::exp(dist.logvar.data()[i]) - 1.0) * inv_batch;
    }
}

// d_mu and d_logvar of the sampling path z = mu + exp(logvar/2) * eps.
void reparam_grads(const LatentDistribution& dist, const Matrix& eps, const Matrix& d_z,
                   Matrix& d_mu, Matrix& d_logvar) {
    d_mu = d_z;
    d_logvar = Matrix(d_z.rows(), d_z.cols());
    for (std::size_t i = 0; i < d_z.size(); ++i) {
        d_logvar.data()[i] = d_z.data()[i] * eps.data()[i] * 0.5 *
                             std::exp(0.5 * dist.logvar.data()[i]);
    }
}

LossBreakdown run_batch(MvaeModel& model, const Matrix& x, const Matrix& attr_rows,
                        const LossWeights& weights, WassersteinMode mode,
                        const Matrix& eps_main, const Matrix& eps_sem, bool with_grads) {
    if (x.rows() != attr_rows.rows()) {
        throw ShapeError("batch objective: x " + x.shape_str() + " and attr_rows " +
                         attr_rows.shape_str() + " row counts differ");
    }

    LossBreakdown out;
    const Matrix sem = model.embed_net.forward(attr_rows);

    if (model.variant() == Variant::baseline2) {
        const LatentDistribution dist_img = model.main_pair.encode(x);
        const Matrix z_img = reparameterize(dist_img, eps_main);
        const Matrix recon_img = model.main_pair.decode(z_img);

        const LatentDistribution dist_sem = model.semantic_pair.encode(sem);
        const Matrix z_sem = reparameterize(dist_sem, eps_sem);
        const Matrix recon_sem = model.semantic_pair.decode(z_sem);

        out.recon = reconstruction_loss(x, recon_img) + reconstruction_loss(sem, recon_sem);
        out.kl = kl_divergence(dist_img) + kl_divergence(dist_sem);

        WassersteinGrad wg;
        if (weights.gamma != 0.0) {
            wg = with_grads ? wasserstein2_with_grads(x, sem, mode)
                            : WassersteinGrad{wasserstein2(x, sem, mode), {}, {}};
            out.wass = wg.value;
        }
        out.total = weights.alpha * out.recon + weights.gamma * out.wass +
                    weights.beta * out.kl;
        if (!with_grads) return out;

        // Image side: reconstruction target is raw data, its gradient
        // goes nowhere.
        Matrix d_recon_img, d_target_img;
        mae_grads(x, recon_img, weights.alpha, d_recon_img, d_target_img);
        const Matrix d_z_img = model.main_pair.decode_backward(d_recon_img);
        Matrix d_mu_img, d_lv_img;
        reparam_grads(dist_img, eps_main, d_z_img, d_mu_img, d_lv_img);
        add_kl_grads(dist_img, weights.beta, d_mu_img, d_lv_img);
        model.main_pair.encode_backward(d_mu_img, d_lv_img);

        // Semantic side: the target is the embed output, so its MAE
        // gradient flows into the embedding net together with the
        // encoder input path and the distance path.
        Matrix d_recon_sem, d_target_sem;
        mae_grads(sem, recon_sem, weights.alpha, d_recon_sem, d_target_sem);
        const Matrix d_z_sem = model.semantic_pair.decode_backward(d_recon_sem);
        Matrix d_mu_sem, d_lv_sem;
        reparam_grads(dist_sem, eps_sem, d_z_sem, d_mu_sem, d_lv_sem);
        add_kl_grads(dist_sem, weights.beta, d_mu_sem, d_lv_sem);
        Matrix d_sem = model.semantic_pair.encode_backward(d_mu_sem, d_lv_sem);
        add_in_place(d_sem, d_target_sem);
        if (weights.gamma != 0.0) {
            add_in_place(d_sem, scale(wg.grad_b, weights.gamma));
        }
        model.embed_net.backward(d_sem);
        return out;
    }

    const Matrix combined = build_combined(x, sem);
    const LatentDistribution dist = model.main_pair.encode(combined);
    const Matrix z = reparameterize(dist, eps_main);
    const Matrix recon = model.main_pair.decode(z);

    out.recon = reconstruction_loss(combined, recon);
    out.kl = kl_divergence(dist);
    WassersteinGrad wg;
    if (weights.gamma != 0.0) {
        wg = with_grads ? wasserstein2_with_grads(x, sem, mode)
                        : WassersteinGrad{wasserstein2(x, sem, mode), {}, {}};
        out.wass = wg.value;
    }
    out.total = weights.alpha * out.recon + weights.gamma * out.wass +
                weights.beta * out.kl;
    if (!with_grads) return out;

    Matrix d_recon, d_target;
    mae_grads(combined, recon, weights.alpha, d_recon, d_target);
    const Matrix d_z = model.main_pair.decode_backward(d_recon);
    Matrix d_mu, d_logvar;
    reparam_grads(dist, eps_main, d_z, d_mu, d_logvar);
    add_kl_grads(dist, weights.beta, d_mu, d_logvar);
    Matrix d_combined = model.main_pair.encode_backward(d_mu, d_logvar);
    add_in_place(d_combined, d_target);

    // Semantic columns of the combined gradient feed the embed net; the
    // image columns hit raw data and stop there.
    auto [d_x, d_sem] = split_combined(d_combined, x.cols());
    (void)d_x;
    if (weights.gamma != 0.0) {
        add_in_place(d_sem, scale(wg.grad_b, weights.gamma));
    }
    model.embed_net.backward(d_sem);
    return out;
}

}  // namespace

LossBreakdown batch_forward(MvaeModel& model, const Matrix& x, const Matrix& attr_rows,
                            const LossWeights& weights, WassersteinMode mode,
                            const Matrix& eps_main, const Matrix& eps_sem) {
    return run_batch(model, x, attr_rows, weights, mode, eps_main, eps_sem, false);
}

LossBreakdown batch_forward_backward(MvaeModel& model, const Matrix& x,
                                     const Matrix& attr_rows, const LossWeights& weights,
                                     WassersteinMode mode, const Matrix& eps_main,
                                     const Matrix& eps_sem) {
    return run_batch(model, x, attr_rows, weights, mode, eps_main, eps_sem, true);
}

Trainer::Trainer(MvaeModel& model, const ModelConfig& cfg, SeededRng& root)
    : model_(model),
      cfg_(cfg),
      weights_{cfg.alpha, cfg.gamma, cfg.beta},
      mode_(wasserstein_mode_from_string(cfg.wasserstein_mode)),
      shuffle_rng_(root.substream(TAG_SHUFFLE)),
      noise_rng_(root.substream(TAG_NOISE)) {
    for (const ParamBlock& block : model.parameter_blocks()) {
        states_.emplace_back(block.name, block.value->rows(), block.value->cols(),
                             cfg.lr);
    }
}

LossBreakdown Trainer::train_epoch(const FeatureDataset& ds) {
    if (ds.train_seen.empty()) {
        throw DegenerateDataError("train split is empty");
    }
    std::vector<std::size_t> order = ds.train_seen;
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = shuffle_rng_.next_u64() % i;
        std::swap(order[i - 1], order[j]);
    }

    LossBreakdown epoch;
    std::size_t total_rows = 0;
    const bool two_pairs = model_.variant() == Variant::baseline2;

    for (std::size_t begin = 0; begin < order.size(); begin += cfg_.batch) {
        const std::size_t count = std::min(cfg_.batch, order.size() - begin);
        std::vector<std::size_t> batch_idx(order.begin() + begin,
                                           order.begin() + begin + count);
        const Matrix x = gather_rows(ds.features, batch_idx);
        std::vector<std::size_t> label_rows;
        label_rows.reserve(count);
        for (std::size_t i : batch_idx) label_rows.push_back(ds.labels[i]);
        const Matrix attr_rows = gather_rows(ds.attributes, label_rows);

        const Matrix eps_main = gaussian_sample(noise_rng_, count, model_.latent_dim());
        const Matrix eps_sem =
            two_pairs ? gaussian_sample(noise_rng_, count, model_.latent_dim()) : Matrix();

        const LossBreakdown loss = batch_forward_backward(model_, x, attr_rows, weights_,
                                                          mode_, eps_main, eps_sem);

        auto blocks = model_.parameter_blocks();
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (cfg_.optimizer == "sgd") {
                sgd_step(*blocks[b].value, *blocks[b].grad, cfg_.lr);
            } else {
                adam_step(*blocks[b].value, *blocks[b].grad, states_[b]);
            }
        }

        const double w = static_cast<double>(count);
        epoch.total += loss.total * w;
        epoch.recon += loss.recon * w;
        epoch.kl += loss.kl * w;
        epoch.wass += loss.wass * w;
        total_rows += count;
    }

    const double inv = 1.0 / static_cast<double>(total_rows);
    epoch.total *= inv;
    epoch.recon *= inv;
    epoch.kl *= inv;
    epoch.wass *= inv;
    model_.mark_trained();
    return epoch;
}

MvaeObjectiveMap::MvaeObjectiveMap(MvaeModel& model, Matrix attr_rows,
                                   LossWeights weights, WassersteinMode mode,
                                   Matrix eps_main, Matrix eps_sem)
    : model_(model),
      attr_rows_(std::move(attr_rows)),
      weights_(weights),
      mode_(mode),
      eps_main_(std::move(eps_main)),
      eps_sem_(std::move(eps_sem)) {}

double MvaeObjectiveMap::loss(const Matrix& input) {
    return batch_forward(model_, input, attr_rows_, weights_, mode_, eps_main_, eps_sem_)
        .total;
}

double MvaeObjectiveMap::loss_with_grads(const Matrix& input) {
    return batch_forward_backward(model_, input, attr_rows_, weights_, mode_, eps_main_,
                                  eps_sem_)
        .total;
}

std::vector<ParamBlock> MvaeObjectiveMap::parameter_blocks() {
    return model_.parameter_blocks();
}

}  // namespace mvae
