#include "filter/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "filter/errors.hpp"

namespace filter {

double dot(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

double ordered_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw NumericError("cosine_sim: length mismatch");
    double suu = dot(u, u);
    double svv = dot(v, v);
    if (std::sqrt(suu) < kNormEpsilon || std::sqrt(svv) < kNormEpsilon) {
        throw NumericError("cosine_sim: vector norm below 1e-8");
    }
    double c = dot(u, v) / std::sqrt(suu * svv);
    return std::clamp(c, -1.0, 1.0);
}

void cosine_sim_grad_accum(std::span<const double> u, std::span<const double> v,
                           double d_out, std::span<double> du, std::span<double> dv) {
    double nu = norm(u);
    double nv = norm(v);
    if (nu < kNormEpsilon || nv < kNormEpsilon) {
        throw NumericError("cosine_sim_grad: vector norm below 1e-8");
    }
    double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
    double inv = 1.0 / (nu * nv);
    for (size_t i = 0; i < u.size(); ++i) {
        du[i] += d_out * (v[i] * inv - c * u[i] / (nu * nu));
        dv[i] += d_out * (u[i] * inv - c * v[i] / (nv * nv));
    }
}

std::vector<double> softmax_masked(std::span<const double> logits,
                                   std::span<const uint8_t> mask) {
    size_t n = logits.size();
    std::vector<double> probs(n, 0.0);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
    }
    if (!std::isfinite(max_logit)) {
        throw NumericError("softmax_masked: all entries masked");
    }
    std::vector<double> terms;
    terms.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            probs[i] = std::exp(logits[i] - max_logit);
            terms.push_back(probs[i]);
        }
    }
    double denom = ordered_sum(terms);
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) probs[i] /= denom;
    }
    return probs;
}

std::vector<double> softmax_masked_backward(std::span<const double> probs,
                                            std::span<const double> d_probs,
                                            std::span<const uint8_t> mask) {
    size_t n = probs.size();
    double inner = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) inner += probs[i] * d_probs[i];
    }
    std::vector<double> d_logits(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        if (mask[i]) d_logits[i] = probs[i] * (d_probs[i] - inner);
    }
    return d_logits;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double bce(double y_hat, int y) {
    double p = std::clamp(y_hat, kProbEpsilon, 1.0 - kProbEpsilon);
    return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double bce_grad(double y_hat, int y) {
    if (y_hat < kProbEpsilon || y_hat > 1.0 - kProbEpsilon) return 0.0;
    return y == 1 ? -1.0 / y_hat : 1.0 / (1.0 - y_hat);
}

}  // namespace filter
