#ifndef MVAE_GRADCHECK_HPP
#define MVAE_GRADCHECK_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "mvae/matrix.hpp"

namespace mvae {

// Named view of one parameter matrix and its gradient buffer.
struct ParamBlock {
    std::string name;
    Matrix* value = nullptr;
    const Matrix* grad = nullptr;
};

// Scalar objective over a fixed input batch plus named parameter blocks.
// loss must be deterministic: any sampling noise has to be frozen before
// a finite-difference comparison makes sense.
class DifferentiableMap {
public:
    virtual ~DifferentiableMap() = default;
    virtual double loss(const Matrix& input) = 0;
    // Same value as loss, and fills the gradient buffer of every block.
    virtual double loss_with_grads(const Matrix& input) = 0;
    virtual std::vector<ParamBlock> parameter_blocks() = 0;
};

struct BlockCheck {
    std::string name;
    double max_rel_error = 0.0;
    bool passed = false;
};

struct GradCheckReport {
    double tolerance = 0.0;
    double step = 0.0;
    std::vector<BlockCheck> blocks;
    bool all_passed() const;
    double worst_rel_error() const;
};

// Central differences, entry by entry, against the analytic gradients.
// Relative error uses max(|analytic|, |numeric|, 1e-6) as denominator so
// near-zero gradients do not blow the ratio up on rounding noise.
GradCheckReport gradient_check(DifferentiableMap& map, const Matrix& input,
                               double tolerance, double step = 1e-5);

}  // namespace mvae

#endif
