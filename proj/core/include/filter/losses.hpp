#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "filter/tensor.hpp"

namespace filter {

/// Per-group class prototypes: arithmetic means of the real / fake member
/// features. A prototype is present only when its class has members; a
/// present prototype whose norm falls below the usable threshold raises
/// DegeneratePrototypeError.
struct Prototypes {
    std::vector<double> real;  // F_R, empty when real_count == 0
    std::vector<double> fake;  // F_F, empty when fake_count == 0
    int real_count = 0;        // N
    int fake_count = 0;        // M

    bool has_real() const { return real_count > 0; }
    bool has_fake() const { return fake_count > 0; }
};

/// Means over unmasked rows of `features` split by label (0 = real,
/// 1 = fake). Throws DegeneratePrototypeError if a present class mean has
/// norm below 1e-8.
Prototypes prototypes(const Tensor& features, std::span<const uint8_t> mask,
                      std::span<const int> labels);

/// Pull loss: sum over unmasked reals of (1 - cos(f, F_R)) plus sum over
/// unmasked fakes of (1 - cos(f, F_F)). A class with no members contributes
/// zero. Always >= 0; exactly 0 iff every member aligns with its prototype.
double pull_loss(const Tensor& features, std::span<const uint8_t> mask,
                 std::span<const int> labels, const Prototypes& protos);

/// Accumulates d_out * d(pull)/d(features) into d_features, including the
/// paths through the prototype means.
void pull_loss_backward(const Tensor& features, std::span<const uint8_t> mask,
                        std::span<const int> labels, const Prototypes& protos,
                        double d_out, Tensor& d_features);

/// Push loss, exponential-of-sums form:
///   exp(sum over fakes of -(1 - cos(f_F, F_R)))
/// + exp(sum over reals of -(1 - cos(f_R, F_F))).
/// Each exponent is <= 0, so the value is in (0, 2]. Requires both classes
/// present (throws NumericError otherwise); callers skip the term for
/// single-class groups.
double push_loss(const Tensor& features, std::span<const uint8_t> mask,
                 std::span<const int> labels, const Prototypes& protos);

void push_loss_backward(const Tensor& features, std::span<const uint8_t> mask,
                        std::span<const int> labels, const Prototypes& protos,
                        double d_out, Tensor& d_features);

struct LossWeights {
    double lambda_local = 1.0;
    double lambda_pull = 4.0;
    double lambda_push = 1.0;
};

struct LossBreakdown {
    double global_ = 0.0;
    double local = 0.0;
    double pull = 0.0;
    double push = 0.0;
    double total = 0.0;
};

/// total = ((global + lambda_local*local) + lambda_pull*pull) + lambda_push*push,
/// evaluated in exactly that order so the identity is reproducible bitwise.
LossBreakdown total_loss(double global_loss, double local_loss, double pull,
                         double push, const LossWeights& weights);

}  // namespace filter
