#ifndef MVAE_WASSERSTEIN_HPP
#define MVAE_WASSERSTEIN_HPP

#include <cstddef>
#include <string>

#include "mvae/matrix.hpp"

namespace mvae {

enum class WassersteinMode { quantile_1d, gaussian_diag };

WassersteinMode wasserstein_mode_from_string(const std::string& s);
std::string to_string(WassersteinMode mode);

// Number of probability points the quantile mode evaluates.
constexpr std::size_t QUANTILE_GRID_POINTS = 512;

// Order-2 Wasserstein distance between two sample batches.
//
// quantile-1d pools each batch into one 1-d empirical distribution,
// evaluates both quantile functions on a shared midpoint probability
// grid with linear interpolation between order statistics, and returns
// the root mean squared gap. Batches of different widths are fine since
// pooling flattens them.
//
// gaussian-diag fits a diagonal Gaussian to each batch (per-column mean
// and population standard deviation) and returns the closed form
// sqrt(sum_d (mu_a - mu_b)^2 + (sigma_a - sigma_b)^2). Both batches
// must have the same width.
double wasserstein2(const Matrix& a, const Matrix& b, WassersteinMode mode);

struct WassersteinGrad {
    double value = 0.0;
    Matrix grad_a;
    Matrix grad_b;
};

// Value plus exact gradients of the formula above with respect to every
// entry of both batches. At value 0 the distance is not differentiable
// and both gradients are returned as 0.
WassersteinGrad wasserstein2_with_grads(const Matrix& a, const Matrix& b,
                                        WassersteinMode mode);

}  // namespace mvae

#endif
