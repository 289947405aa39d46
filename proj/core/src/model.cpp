#include "mvae/model.hpp"

#include <cmath>

#include "mvae/errors.hpp"

namespace mvae {

Variant variant_from_string(const std::string& s) {
    if (s == "mvae") return Variant::mvae;
    if (s == "baseline1") return Variant::baseline1;
    if (s == "baseline2") return Variant::baseline2;
    throw ConfigError("unknown variant '" + s + "'");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::mvae: return "mvae";
        case Variant::baseline1: return "baseline1";
        case Variant::baseline2: return "baseline2";
    }
    throw DomainError("unreachable variant");
}

VaePair::VaePair(std::size_t width, std::size_t hidden, std::size_t latent,
                 SeededRng& rng)
    : trunk(AffineLayer::glorot_uniform(width, hidden, rng)),
      mu_head(AffineLayer::glorot_uniform(hidden, latent, rng)),
      logvar_head(AffineLayer::glorot_uniform(hidden, latent, rng)),
      dec1(AffineLayer::glorot_uniform(latent, hidden, rng)),
      dec2(AffineLayer::glorot_uniform(hidden, width, rng)) {}

LatentDistribution VaePair::encode(const Matrix& input) {
    if (input.cols() != width()) {
        throw ShapeError("encode: input " + input.shape_str() +
                         " does not match pair width " + std::to_string(width()));
    }
    enc_pre_ = trunk.forward(input);
    const Matrix hidden = relu(enc_pre_);
    LatentDistribution dist;
    dist.mu = mu_head.forward(hidden);
    raw_logvar_ = logvar_head.forward(hidden);
    dist.logvar = raw_logvar_;
    for (std::size_t i = 0; i < dist.logvar.size(); ++i) {
        double& v = dist.logvar.data()[i];
        if (v > LOGVAR_CLAMP) v = LOGVAR_CLAMP;
        if (v < -LOGVAR_CLAMP) v = -LOGVAR_CLAMP;
    }
    has_encoded_ = true;
    return dist;
}

Matrix VaePair::decode(const Matrix& z) {
    if (z.cols() != latent_dim()) {
        throw ShapeError("decode: z " + z.shape_str() + " does not match latent dim " +
                         std::to_string(latent_dim()));
    }
    dec_pre_ = dec1.forward(z);
    has_decoded_ = true;
    return dec2.forward(relu(dec_pre_));
}

Matrix VaePair::encode_backward(const Matrix& d_mu, const Matrix& d_logvar) {
    if (!has_encoded_) {
        throw StateError("encode_backward: no cached encode, call encode first");
    }
    // Gradients through the clamp vanish where the raw logvar saturated.
    Matrix d_raw = d_logvar;
    for (std::size_t i = 0; i < d_raw.size(); ++i) {
        const double raw = raw_logvar_.data()[i];
        if (raw >= LOGVAR_CLAMP || raw <= -LOGVAR_CLAMP) d_raw.data()[i] = 0.0;
    }
    Matrix d_hidden = mu_head.backward(d_mu);
    add_in_place(d_hidden, logvar_head.backward(d_raw));
    return trunk.backward(relu_backward(enc_pre_, d_hidden));
}

Matrix VaePair::decode_backward(const Matrix& d_recon) {
    if (!has_decoded_) {
        throw StateError("decode_backward: no cached decode, call decode first");
    }
    const Matrix d_hidden = dec2.backward(d_recon);
    return dec1.backward(relu_backward(dec_pre_, d_hidden));
}

MvaeModel::MvaeModel(const ModelConfig& cfg, std::size_t d_attr, SeededRng& rng)
    : config_(cfg), d_attr_(d_attr), variant_(variant_from_string(cfg.variant)) {
    if (d_attr == 0) {
        throw ShapeError("model: attribute width must be at least 1");
    }
    // Draw order is fixed: embed net first, then the pair(s), so equal
    // seeds give identical initial parameters.
    embed_net = DeepEmbeddingNet(d_attr, cfg.embed_hidden, cfg.d_attr_embed, rng,
                                 cfg.embed_final_relu);
    if (variant_ == Variant::baseline2) {
        main_pair = VaePair(cfg.d_img, cfg.vae_hidden, cfg.latent, rng);
        semantic_pair = VaePair(cfg.d_attr_embed, cfg.vae_hidden, cfg.latent, rng);
    } else {
        main_pair = VaePair(cfg.d_img + cfg.d_attr_embed, cfg.vae_hidden, cfg.latent, rng);
    }
}

std::vector<ParamBlock> MvaeModel::parameter_blocks() {
    std::vector<ParamBlock> blocks;
    auto push_layer = [&blocks](const std::string& name, AffineLayer& layer) {
        blocks.push_back({name + ".weight", &layer.weight, &layer.grad_weight});
        blocks.push_back({name + ".bias", &layer.bias, &layer.grad_bias});
    };
    push_layer("embed.layer1", embed_net.layer1);
    push_layer("embed.layer2", embed_net.layer2);
    auto push_pair = [&push_layer](const std::string& prefix, VaePair& pair) {
        push_layer(prefix + ".trunk", pair.trunk);
        push_layer(prefix + ".mu", pair.mu_head);
        push_layer(prefix + ".logvar", pair.logvar_head);
        push_layer(prefix + ".dec1", pair.dec1);
        push_layer(prefix + ".dec2", pair.dec2);
    };
    if (variant_ == Variant::baseline2) {
        push_pair("image", main_pair);
        push_pair("semantic", semantic_pair);
    } else {
        push_pair("vae", main_pair);
    }
    return blocks;
}

Matrix build_combined(const Matrix& x, const Matrix& sem) {
    return hconcat(x, sem);
}

std::pair<Matrix, Matrix> split_combined(const Matrix& combined, std::size_t d_img) {
    if (combined.cols() < d_img) {
        throw ShapeError("split_combined: " + combined.shape_str() +
                         " narrower than image width " + std::to_string(d_img));
    }
    return {slice_cols(combined, 0, d_img),
            slice_cols(combined, d_img, combined.cols() - d_img)};
}

LatentDistribution encode(MvaeModel& model, const Matrix& combined) {
    return model.main_pair.encode(combined);
}

Matrix reparameterize(const LatentDistribution& dist, const Matrix& eps) {
    if (!dist.mu.same_shape(dist.logvar) || !dist.mu.same_shape(eps)) {
        throw ShapeError("reparameterize: mu " + dist.mu.shape_str() + ", logvar " +
                         dist.logvar.shape_str() + " and eps " + eps.shape_str() +
                         " must all match");
    }
    Matrix z = dist.mu;
    for (std::size_t i = 0; i < z.size(); ++i) {
        z.data()[i] += std::exp(0.5 * dist.logvar.data()[i]) * eps.data()[i];
    }
    return z;
}

Matrix decode(MvaeModel& model, const Matrix& z) {
    return model.main_pair.decode(z);
}

double reconstruction_loss(const Matrix& original, const Matrix& reconstructed) {
    if (!original.same_shape(reconstructed)) {
        throw ShapeError("reconstruction_loss: original " + original.shape_str() +
                         " and reconstruction " + reconstructed.shape_str() +
                         " must match");
    }
    if (original.size() == 0) {
        throw DomainError("reconstruction_loss: empty batch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        acc += std::abs(original.data()[i] - reconstructed.data()[i]);
    }
    return acc / static_cast<double>(original.size());
}

double kl_divergence(const LatentDistribution& dist) {
    if (!dist.mu.same_shape(dist.logvar)) {
        throw ShapeError("kl_divergence: mu " + dist.mu.shape_str() + " and logvar " +
                         dist.logvar.shape_str() + " must match");
    }
    if (dist.mu.rows() == 0) {
        throw DomainError("kl_divergence: empty batch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.mu.size(); ++i) {
        const double mu = dist.mu.data()[i];
        const double lv = dist.logvar.data()[i];
        acc += std::exp(lv) + mu * mu - 1.0 - lv;
    }
    return 0.5 * acc / static_cast<double>(dist.mu.rows());
}

LossBreakdown total_loss(const Matrix& original, const Matrix& reconstructed,
                         const LatentDistribution& dist, const LossWeights& weights,
                         const Matrix& x_batch, const Matrix& sem_batch,
                         WassersteinMode mode) {
    LossBreakdown out;
    out.recon = reconstruction_loss(original, reconstructed);
    out.kl = kl_divergence(dist);
    out.wass = weights.gamma == 0.0 ? 0.0 : wasserstein2(x_batch, sem_batch, mode);
    out.total = weights.alpha * out.recon + weights.gamma * out.wass + weights.beta * out.kl;
    return out;
}

}  // namespace mvae
