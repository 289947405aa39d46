#ifndef MVAE_MODEL_HPP
#define MVAE_MODEL_HPP

#include <string>
#include <vector>

#include "mvae/config.hpp"
#include "mvae/embed_net.hpp"
#include "mvae/gradcheck.hpp"
#include "mvae/layers.hpp"
#include "mvae/matrix.hpp"
#include "mvae/rng.hpp"
#include "mvae/wasserstein.hpp"

namespace mvae {

enum class Variant { mvae, baseline1, baseline2 };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

// Diagonal Gaussian over the latent space. logvar is clamped to
// [-10, 10] at encoding time to keep exp() tame.
struct LatentDistribution {
    Matrix mu;      // batch x latent
    Matrix logvar;  // batch x latent
};

struct LossWeights {
    double alpha = 1.0;
    double gamma = 1.0;
    double beta = 1.0;
};

struct LossBreakdown {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    double wass = 0.0;
};

constexpr double LOGVAR_CLAMP = 10.0;

// One encoder-decoder pair: a shared trunk feeding mu and logvar heads,
// and a two-layer decoder mirroring it. Forward passes cache what their
// backward passes need; each backward is valid only after the matching
// forward on the same batch.
class VaePair {
public:
    VaePair() = default;
    VaePair(std::size_t width, std::size_t hidden, std::size_t latent, SeededRng& rng);

    LatentDistribution encode(const Matrix& input);
    Matrix decode(const Matrix& z);
    // Pushes dLoss/dmu and dLoss/dlogvar back through heads and trunk;
    // returns dLoss/dinput.
    Matrix encode_backward(const Matrix& d_mu, const Matrix& d_logvar);
    // Returns dLoss/dz.
    Matrix decode_backward(const Matrix& d_recon);

    std::size_t width() const { return trunk.in_dim(); }
    std::size_t latent_dim() const { return mu_head.out_dim(); }

    AffineLayer trunk;
    AffineLayer mu_head;
    AffineLayer logvar_head;
    AffineLayer dec1;
    AffineLayer dec2;

private:
    Matrix enc_pre_;
    Matrix raw_logvar_;
    Matrix dec_pre_;
    bool has_encoded_ = false;
    bool has_decoded_ = false;
};

// The full multimodal model. mvae and baseline1 share one pair over the
// concatenated [x, phi(c(y))] input; baseline2 holds one pair per
// modality. All variants share the attribute embedding net.
class MvaeModel {
public:
    MvaeModel() = default;
    // Randomly initialized; the rng should be a dedicated substream.
    // d_attr is the attribute width of the dataset the model will see.
    MvaeModel(const ModelConfig& cfg, std::size_t d_attr, SeededRng& rng);

    Variant variant() const { return variant_; }
    const ModelConfig& config() const { return config_; }
    std::size_t d_img() const { return config_.d_img; }
    std::size_t d_attr() const { return d_attr_; }
    std::size_t d_sem() const { return config_.d_attr_embed; }
    std::size_t latent_dim() const { return config_.latent; }
    // Width of the combined input (single-pair variants) or the sum of
    // the two modality widths (baseline2).
    std::size_t combined_width() const { return config_.d_img + config_.d_attr_embed; }

    bool trained() const { return trained_; }
    void mark_trained() { trained_ = true; }

    // Fixed order shared by checkpoints and optimizer states.
    std::vector<ParamBlock> parameter_blocks();

    DeepEmbeddingNet embed_net;
    VaePair main_pair;      // combined width, or the image pair for baseline2
    VaePair semantic_pair;  // baseline2 only

private:
    ModelConfig config_;
    std::size_t d_attr_ = 0;
    Variant variant_ = Variant::mvae;
    bool trained_ = false;
};

// [x, sem] with x on the left.
Matrix build_combined(const Matrix& x, const Matrix& sem);
// Inverse of build_combined for a given image width.
std::pair<Matrix, Matrix> split_combined(const Matrix& combined, std::size_t d_img);

// Encode through the model's main pair; the input width must match.
LatentDistribution encode(MvaeModel& model, const Matrix& combined);
// z = mu + exp(logvar / 2) * eps, elementwise.
Matrix reparameterize(const LatentDistribution& dist, const Matrix& eps);
Matrix decode(MvaeModel& model, const Matrix& z);

// Mean absolute error over all entries.
double reconstruction_loss(const Matrix& original, const Matrix& reconstructed);
// KL(q || N(0, I)) averaged over the batch, summed over latent dims.
double kl_divergence(const LatentDistribution& dist);

// total = alpha * recon + gamma * wasserstein(x, sem) + beta * kl.
// With gamma == 0 the distance is skipped entirely and reported as 0.
LossBreakdown total_loss(const Matrix& original, const Matrix& reconstructed,
                         const LatentDistribution& dist, const LossWeights& weights,
                         const Matrix& x_batch, const Matrix& sem_batch,
                         WassersteinMode mode);

}  // namespace mvae

#endif
