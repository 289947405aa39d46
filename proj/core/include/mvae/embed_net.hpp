#ifndef MVAE_EMBED_NET_HPP
#define MVAE_EMBED_NET_HPP

#include <cstdint>
#include <vector>

#include "mvae/layers.hpp"
#include "mvae/matrix.hpp"
#include "mvae/rng.hpp"

namespace mvae {

// Deep embedding of class attribute vectors: two fully connected layers
// with a ReLU after each. The trailing ReLU can be disabled via the
// embed_final_relu config key, which leaves the output space signed
// rather than non-negative.
class DeepEmbeddingNet {
public:
    DeepEmbeddingNet() = default;
    DeepEmbeddingNet(std::size_t d_attr, std::size_t hidden, std::size_t d_out,
                     SeededRng& rng, bool final_relu = true);

    Matrix forward(const Matrix& attrs);
    // Valid after forward on the same batch; fills the layer gradients
    // and returns the gradient with respect to the attribute input.
    Matrix backward(const Matrix& upstream);

    std::size_t in_dim() const { return layer1.in_dim(); }
    std::size_t out_dim() const { return layer2.out_dim(); }

    AffineLayer layer1;
    AffineLayer layer2;
    bool final_relu = true;

private:
    Matrix pre1_;
    Matrix pre2_;
    bool has_forward_ = false;
};

// Rows of forward(attributes) gathered per sample label.
Matrix embed_rows_for_labels(DeepEmbeddingNet& net, const Matrix& attributes,
                             const std::vector<std::uint32_t>& labels);

}  // namespace mvae

#endif
