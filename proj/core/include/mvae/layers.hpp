#ifndef MVAE_LAYERS_HPP
#define MVAE_LAYERS_HPP

#include <cstddef>
#include <utility>

#include "mvae/matrix.hpp"
#include "mvae/rng.hpp"

namespace mvae {

// Fully connected layer computing y = x W^T + b for a batch of row
// vectors. The layer caches the input of the last forward call; backward
// is only valid after a forward on the same batch and overwrites the
// gradient buffers rather than accumulating into them.
class AffineLayer {
public:
    AffineLayer() = default;
    AffineLayer(std::size_t in_dim, std::size_t out_dim);

    // Uniform init on [-s, s] with s = sqrt(6 / (in + out)).
    static AffineLayer glorot_uniform(std::size_t in_dim, std::size_t out_dim,
                                      SeededRng& rng);

    Matrix forward(const Matrix& input);
    // upstream holds dLoss/dy; fills grad_weight and grad_bias and
    // returns dLoss/dx. Throws StateError before any forward and
    // ShapeError when upstream does not match the cached batch.
    Matrix backward(const Matrix& upstream);

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
    bool has_cached_input() const { return has_cached_; }
    void clear_cache();

    Matrix weight;      // out x in
    Matrix bias;        // 1 x out
    Matrix grad_weight; // out x in, valid after backward
    Matrix grad_bias;   // 1 x out, valid after backward

private:
    Matrix cached_input_;
    bool has_cached_ = false;
};

// Elementwise max(x, 0).
Matrix relu(const Matrix& x);
// upstream masked by x > 0. The mask uses the pre-activation x, so the
// gradient at exactly 0 is 0.
Matrix relu_backward(const Matrix& x, const Matrix& upstream);
// Convenience bundle of both directions for a single pre-activation.
std::pair<Matrix, Matrix> relu_forward_backward(const Matrix& x, const Matrix& upstream);

}  // namespace mvae

#endif
