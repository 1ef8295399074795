#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace filter {

/// A scalar-valued differentiable operation prepared for finite-difference
/// verification. `x0` holds every differentiable input (inputs and parameters
/// flattened together); `forward` evaluates the scalar output and `backward`
/// returns the analytic gradient at the same point. Vector-valued operations
/// are reduced to a scalar by contracting with a fixed random cotangent
/// before being wrapped into one of these.
struct GradCheckProblem {
    std::string name;
    std::vector<double> x0;
    std::function<double(std::span<const double>)> forward;
    std::function<std::vector<double>(std::span<const double>)> backward;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares the analytic gradient against central differences
/// (f(x+eps)-f(x-eps))/(2 eps) per coordinate. Relative error per coordinate
/// is |a-n| / max(1e-8, |a|+|n|). Throws NumericError if the forward value is
/// not finite at x0.
GradCheckResult grad_check(const GradCheckProblem& problem, double eps = 1e-5);

}  // namespace filter
