#include "mvae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mvae/errors.hpp"

namespace mvae {

bool GradCheckReport::all_passed() const {
    return std::all_of(blocks.begin(), blocks.end(),
                       [](const BlockCheck& b) { return b.passed; });
}

double GradCheckReport::worst_rel_error() const {
    double w = 0.0;
    for (const BlockCheck& b : blocks) w = std::max(w, b.max_rel_error);
    return w;
}

GradCheckReport gradient_check(DifferentiableMap& map, const Matrix& input,
                               double tolerance, double step) {
    if (!(step > 0.0) || !(tolerance > 0.0)) {
        throw DomainError("gradient_check: step and tolerance must be positive");
    }
    GradCheckReport report;
    report.tolerance = tolerance;
    report.step = step;

    map.loss_with_grads(input);
    auto blocks = map.parameter_blocks();

    // Copy the analytic gradients before perturbing anything; later
    // loss calls may leave the live buffers in any state.
    std::vector<Matrix> analytic;
    analytic.reserve(blocks.size());
    for (const ParamBlock& b : blocks) analytic.push_back(*b.grad);

    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        ParamBlock& block = blocks[bi];
        BlockCheck check;
        check.name = block.name;
        for (std::size_t i = 0; i < block.value->size(); ++i) {
            double& p = block.value->data()[i];
            const double saved = p;
            p = saved + step;
            const double loss_plus = map.loss(input);
            p = saved - step;
            const double loss_minus = map.loss(input);
            p = saved;
            const double numeric = (loss_plus - loss_minus) / (2.0 * step);
            const double a = analytic[bi].data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            const double rel = std::abs(a - numeric) / denom;
            check.max_rel_error = std::max(check.max_rel_error, rel);
        }
        check.passed = check.max_rel_error < tolerance;
        report.blocks.push_back(std::move(check));
    }
    return report;
}

}  // namespace mvae
