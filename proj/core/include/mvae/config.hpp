#ifndef MVAE_CONFIG_HPP
#define MVAE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>

namespace mvae {

// Full run configuration. Defaults reproduce the reference setup for
// 2048-dimensional image features; every key can be overridden in a
// plain "key = value" config file with '#' comments.
struct ModelConfig {
    // architecture
    std::size_t d_img = 2048;
    std::size_t embed_hidden = 1450;
    std::size_t d_attr_embed = 1200;
    std::size_t vae_hidden = 1660;
    std::size_t latent = 64;

    // training
    std::size_t epochs = 100;
    std::size_t batch = 50;
    double alpha = 1.0;
    double gamma = 1.0;
    double beta = 1.0;
    double lr = 1e-3;
    std::string optimizer = "adam";  // adam | sgd
    std::string variant = "mvae";    // mvae | baseline1 | baseline2
    std::string wasserstein_mode = "quantile-1d";  // quantile-1d | gaussian-diag
    bool embed_final_relu = true;

    // classifier stage
    std::string classifier_space = "reconstruction";  // reconstruction | latent
    std::size_t n_syn_per_novel = 200;
    std::size_t classifier_hidden1 = 512;
    std::size_t classifier_hidden2 = 256;
    std::size_t classifier_epochs = 30;
    bool classifier_seen_unmasked = false;

    std::uint64_t seed = 0;

    bool operator==(const ModelConfig&) const = default;
};

ModelConfig parse_config(const std::filesystem::path& path);
// origin labels error messages, e.g. "defaults.conf:3: ...".
ModelConfig parse_config_text(const std::string& text, const std::string& origin);

// One "key = value" line per key in a fixed order. parse_config_text of
// the result reproduces the struct exactly.
std::string serialize_config(const ModelConfig& cfg);

}  // namespace mvae

#endif
