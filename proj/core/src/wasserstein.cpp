#include "mvae/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mvae/errors.hpp"

namespace mvae {

namespace {

constexpr double ZERO_DISTANCE_GUARD = 1e-12;

struct SortedPool {
    std::vector<double> values;       // ascending
    std::vector<std::size_t> origin;  // flat index into the source matrix
};

SortedPool sort_pool(const Matrix& m) {
    SortedPool pool;
    pool.values.assign(m.data(), m.data() + m.size());
    pool.origin.resize(m.size());
    std::iota(pool.origin.begin(), pool.origin.end(), std::size_t{0});
    // Ties break on the original index so the permutation is unique.
    std::sort(pool.origin.begin(), pool.origin.end(),
              [&](std::size_t x, std::size_t y) {
                  const double vx = m.data()[x];
                  const double vy = m.data()[y];
                  return vx < vy || (vx == vy && x < y);
              });
    std::vector<double> sorted(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) sorted[i] = m.data()[pool.origin[i]];
    pool.values = std::move(sorted);
    return pool;
}

struct QuantileEval {
    std::vector<double> q;      // one value per grid point
    std::vector<std::size_t> lo;  // lower order statistic index
    std::vector<double> w;      // weight on the upper order statistic
};

QuantileEval eval_quantiles(const SortedPool& pool) {
    const std::size_t n = pool.values.size();
    QuantileEval ev;
    ev.q.resize(QUANTILE_GRID_POINTS);
    ev.lo.resize(QUANTILE_GRID_POINTS);
    ev.w.resize(QUANTILE_GRID_POINTS);
    for (std::size_t k = 0; k < QUANTILE_GRID_POINTS; ++k) {
        const double p = (static_cast<double>(k) + 0.5) /
                         static_cast<double>(QUANTILE_GRID_POINTS);
        if (n == 1) {
            ev.q[k] = pool.values[0];
            ev.lo[k] = 0;
            ev.w[k] = 0.0;
            continue;
        }
        const double t = p * static_cast<double>(n - 1);
        std::size_t i = static_cast<std::size_t>(t);
        if (i > n - 2) i = n - 2;
        const double w = t - static_cast<double>(i);
        ev.q[k] = (1.0 - w) * pool.values[i] + w * pool.values[i + 1];
        ev.lo[k] = i;
        ev.w[k] = w;
    }
    return ev;
}

void check_nonempty(const Matrix& a, const Matrix& b) {
    if (a.size() == 0 || b.size() == 0) {
        throw DomainError("wasserstein2: empty batch, shapes " + a.shape_str() +
                          " and " + b.shape_str());
    }
}

void check_gaussian_widths(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("wasserstein2 gaussian-diag: batches " + a.shape_str() +
                         " and " + b.shape_str() +
                         " have different widths; this mode needs equal widths, "
                         "use an aligned setup with d_attr_embed = d_img or the "
                         "quantile-1d mode");
    }
}

struct DiagStats {
    std::vector<double> mu;
    std::vector<double> sd;  // population standard deviation
};

DiagStats diag_stats(const Matrix& m) {
    DiagStats st;
    st.mu.resize(m.cols());
    st.sd.resize(m.cols());
    const double n = static_cast<double>(m.rows());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) sum += m(i, j);
        st.mu[j] = sum / n;
        double sq = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double d = m(i, j) - st.mu[j];
            sq += d * d;
        }
        st.sd[j] = std::sqrt(sq / n);
    }
    return st;
}

double quantile_distance(const QuantileEval& ea, const QuantileEval& eb) {
    double acc = 0.0;
    for (std::size_t k = 0; k < QUANTILE_GRID_POINTS; ++k) {
        const double d = ea.q[k] - eb.q[k];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(QUANTILE_GRID_POINTS));
}

double gaussian_distance(const DiagStats& sa, const DiagStats& sb) {
    double acc = 0.0;
    for (std::size_t j = 0; j < sa.mu.size(); ++j) {
        const double dm = sa.mu[j] - sb.mu[j];
        const double ds = sa.sd[j] - sb.sd[j];
        acc += dm * dm + ds * ds;
    }
    return std::sqrt(acc);
}

}  // namespace

WassersteinMode wasserstein_mode_from_string(const std::string& s) {
    if (s == "quantile-1d") return WassersteinMode::quantile_1d;
    if (s == "gaussian-diag") return WassersteinMode::gaussian_diag;
    throw ConfigError("unknown wasserstein mode '" + s + "'");
}

std::string to_string(WassersteinMode mode) {
    return mode == WassersteinMode::quantile_1d ? "quantile-1d" : "gaussian-diag";
}

double wasserstein2(const Matrix& a, const Matrix& b, WassersteinMode mode) {
    check_nonempty(a, b);
    if (mode == WassersteinMode::quantile_1d) {
        return quantile_distance(eval_quantiles(sort_pool(a)),
                                 eval_quantiles(sort_pool(b)));
    }
    check_gaussian_widths(a, b);
    return gaussian_distance(diag_stats(a), diag_stats(b));
}

WassersteinGrad wasserstein2_with_grads(const Matrix& a, const Matrix& b,
                                        WassersteinMode mode) {
    check_nonempty(a, b);
    WassersteinGrad out;
    out.grad_a = Matrix(a.rows(), a.cols());
    out.grad_b = Matrix(b.rows(), b.cols());

    if (mode == WassersteinMode::quantile_1d) {
        const SortedPool pa = sort_pool(a);
        const SortedPool pb = sort_pool(b);
        const QuantileEval ea = eval_quantiles(pa);
        const QuantileEval eb = eval_quantiles(pb);
        out.value = quantile_distance(ea, eb);
        if (out.value < ZERO_DISTANCE_GUARD) return out;
        const double denom =
            static_cast<double>(QUANTILE_GRID_POINTS) * out.value;
        for (std::size_t k = 0; k < QUANTILE_GRID_POINTS; ++k) {
            const double dq = (ea.q[k] - eb.q[k]) / denom;
            // Distribute through the interpolation onto the two order
            // statistics, then through the sort onto the source entries.
            {
                const std::size_t i = ea.lo[k];
                const double w = ea.w[k];
                out.grad_a.data()[pa.origin[i]] += dq * (1.0 - w);
                if (w != 0.0) out.grad_a.data()[pa.origin[i + 1]] += dq * w;
            }
            {
                const std::size_t i = eb.lo[k];
                const double w = eb.w[k];
                out.grad_b.data()[pb.origin[i]] -= dq * (1.0 - w);
                if (w != 0.0) out.grad_b.data()[pb.origin[i + 1]] -= dq * w;
            }
        }
        return out;
    }

    check_gaussian_widths(a, b);
    const DiagStats sa = diag_stats(a);
    const DiagStats sb = diag_stats(b);
    out.value = gaussian_distance(sa, sb);
    if (out.value < ZERO_DISTANCE_GUARD) return out;
    const double na = static_cast<double>(a.rows());
    const double nb = static_cast<double>(b.rows());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double dm = sa.mu[j] - sb.mu[j];
        const double ds = sa.sd[j] - sb.sd[j];
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double g = dm / na;
            if (sa.sd[j] > ZERO_DISTANCE_GUARD) {
                g += ds * (a(i, j) - sa.mu[j]) / (na * sa.sd[j]);
            }
            out.grad_a(i, j) = g / out.value;
        }
        for (std::size_t i = 0; i < b.rows(); ++i) {
            double g = -dm / nb;
            if (sb.sd[j] > ZERO_DISTANCE_GUARD) {
                g -= ds * (b(i, j) - sb.mu[j]) / (nb * sb.sd[j]);
            }
            out.grad_b(i, j) = g / out.value;
        }
    }
    return out;
}

}  // namespace mvae
