#ifndef MVAE_ADAM_HPP
#define MVAE_ADAM_HPP

#include <cstddef>
#include <string>

#include "mvae/matrix.hpp"

namespace mvae {

// Per-parameter-block Adam state. Moments start at zero and the step
// counter increments once per update, which drives bias correction.
struct AdamState {
    AdamState() = default;
    AdamState(std::string block_name, std::size_t rows, std::size_t cols,
              double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
              double eps = 1e-8)
        : name(std::move(block_name)),
          m(rows, cols),
          v(rows, cols),
          lr(lr),
          beta1(beta1),
          beta2(beta2),
          eps(eps) {}

    std::string name;
    Matrix m;
    Matrix v;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One Adam update on params in place. Shapes of params, grads and the
// moment buffers must agree.
void adam_step(Matrix& params, const Matrix& grads, AdamState& state);

// Plain mini-batch SGD update, selectable via the optimizer config key.
void sgd_step(Matrix& params, const Matrix& grads, double lr);

}  // namespace mvae

#endif
