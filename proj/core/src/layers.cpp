#include "mvae/layers.hpp"

#include <cmath>

#include "mvae/errors.hpp"

namespace mvae {

AffineLayer::AffineLayer(std::size_t in_dim, std::size_t out_dim)
    : weight(out_dim, in_dim),
      bias(1, out_dim),
      grad_weight(out_dim, in_dim),
      grad_bias(1, out_dim) {}

AffineLayer AffineLayer::glorot_uniform(std::size_t in_dim, std::size_t out_dim,
                                        SeededRng& rng) {
    AffineLayer layer(in_dim, out_dim);
    const double s = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    for (std::size_t i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] = (2.0 * rng.next_uniform() - 1.0) * s;
    }
    return layer;
}

Matrix AffineLayer::forward(const Matrix& input) {
    if (input.cols() != in_dim()) {
        throw ShapeError("affine forward: input " + input.shape_str() +
                         " does not match weight " + weight.shape_str());
    }
    cached_input_ = input;
    has_cached_ = true;
    return add_row_broadcast(matmul_bt(input, weight), bias);
}

Matrix AffineLayer::backward(const Matrix& upstream) {
    if (!has_cached_) {
        throw StateError("affine backward: no cached input, call forward first");
    }
    if (upstream.rows() != cached_input_.rows() || upstream.cols() != out_dim()) {
        throw ShapeError("affine backward: upstream " + upstream.shape_str() +
                         " does not match cached batch " + cached_input_.shape_str() +
                         " with out_dim " + std::to_string(out_dim()));
    }
    grad_weight = matmul_at(upstream, cached_input_);
    grad_bias = col_sums(upstream);
    return matmul(upstream, weight);
}

void AffineLayer::clear_cache() {
    cached_input_ = Matrix();
    has_cached_ = false;
}

Matrix relu(const Matrix& x) {
    Matrix y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y.data()[i] < 0.0) y.data()[i] = 0.0;
    }
    return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& upstream) {
    if (!x.same_shape(upstream)) {
        throw ShapeError("relu backward: upstream " + upstream.shape_str() +
                         " does not match input " + x.shape_str());
    }
    Matrix g = upstream;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (x.data()[i] <= 0.0) g.data()[i] = 0.0;
    }
    return g;
}

std::pair<Matrix, Matrix> relu_forward_backward(const Matrix& x, const Matrix& upstream) {
    return {relu(x), relu_backward(x, upstream)};
}

}  // namespace mvae
