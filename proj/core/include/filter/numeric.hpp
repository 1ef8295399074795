#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace filter {

/// Minimum vector norm accepted by cosine similarity.
inline constexpr double kNormEpsilon = 1e-8;

/// Probability clamp applied inside binary cross-entropy.
inline constexpr double kProbEpsilon = 1e-7;

/// Plain left-to-right dot product. The fixed order is relied upon by tests
/// that construct exactly-cancelling inputs; do not reorder.
double dot(std::span<const double> u, std::span<const double> v);

double norm(std::span<const double> u);

/// Sum of `terms` in ascending value order. The result depends only on the
/// multiset of values, which makes reductions over group slots invariant
/// under slot permutations. Scratch storage is the caller's buffer.
double ordered_sum(std::vector<double>& terms);

/// Cosine similarity, clamped to [-1, 1]. Computed as
/// dot(u,v) / sqrt(dot(u,u)*dot(v,v)); with that form cos(u,u) == 1 and
/// cos(u,-u) == -1 hold exactly. Throws NumericError if either norm is
/// below kNormEpsilon.
double cosine_sim(std::span<const double> u, std::span<const double> v);

/// Analytic gradient of cosine_sim. Adds d_out * (dcos/du) into du and
/// d_out * (dcos/dv) into dv.
void cosine_sim_grad_accum(std::span<const double> u, std::span<const double> v,
                           double d_out, std::span<double> du, std::span<double> dv);

/// Masked softmax with max-subtraction. Masked entries get probability 0;
/// unmasked probabilities sum to 1. Throws NumericError if every entry is
/// masked. The denominator uses an ordered sum so the result is invariant
/// under joint permutation of (logits, mask).
std::vector<double> softmax_masked(std::span<const double> logits,
                                   std::span<const uint8_t> mask);

/// Backward rule: given probs = softmax_masked(logits, mask) and d_probs,
/// returns d_logits (zero on masked entries).
std::vector<double> softmax_masked_backward(std::span<const double> probs,
                                            std::span<const double> d_probs,
                                            std::span<const uint8_t> mask);

double logistic(double z);

/// Binary cross-entropy with the prediction clamped to
/// [kProbEpsilon, 1 - kProbEpsilon].
double bce(double y_hat, int y);

/// Derivative of bce w.r.t. the raw (pre-clamp) prediction; zero where the
/// clamp is active, matching the piecewise-flat forward.
double bce_grad(double y_hat, int y);

}  // namespace filter
