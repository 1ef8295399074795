#include "filter/grad_check.hpp"

#include <cmath>

#include "filter/errors.hpp"

namespace filter {

GradCheckResult grad_check(const GradCheckProblem& problem, double eps) {
    const auto& x0 = problem.x0;
    if (!std::isfinite(problem.forward(x0))) {
        throw NumericError("grad_check(" + problem.name + "): forward not finite at x0");
    }
    std::vector<double> analytic = problem.backward(x0);
    if (analytic.size() != x0.size()) {
        throw NumericError("grad_check(" + problem.name + "): gradient length mismatch");
    }
    std::vector<double> x = x0;
    GradCheckResult result;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double saved = x[i];
        x[i] = saved + eps;
        double f_plus = problem.forward(x);
        x[i] = saved - eps;
        double f_minus = problem.forward(x);
        x[i] = saved;
        double numeric = (f_plus - f_minus) / (2.0 * eps);
        double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > result.max_rel_err) {
            result.max_rel_err = rel;
            result.worst_index = i;
            result.analytic = analytic[i];
            result.numeric = numeric;
        }
    }
    return result;
}

}  // namespace filter
