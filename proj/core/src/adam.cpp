#include "mvae/adam.hpp"

#include <cmath>

#include "mvae/errors.hpp"

namespace mvae {

void adam_step(Matrix& params, const Matrix& grads, AdamState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.m)) {
        throw ShapeError("adam_step: params " + params.shape_str() + ", grads " +
                         grads.shape_str() + ", state " + state.m.shape_str() +
                         " must all match");
    }
    state.step += 1;
    const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads.data()[i];
        double& m = state.m.data()[i];
        double& v = state.v.data()[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / b1t;
        const double v_hat = v / b2t;
        params.data()[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

void sgd_step(Matrix& params, const Matrix& grads, double lr) {
    if (!params.same_shape(grads)) {
        throw ShapeError("sgd_step: params " + params.shape_str() + " and grads " +
                         grads.shape_str() + " must match");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        params.data()[i] -= lr * grads.data()[i];
    }
}

}  // namespace mvae
