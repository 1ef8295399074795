#include "filter/losses.hpp"

#include <cmath>

#include "filter/errors.hpp"
#include "filter/numeric.hpp"

namespace filter {

Prototypes prototypes(const Tensor& features, std::span<const uint8_t> mask,
                      std::span<const int> labels) {
    const int n = features.dim(0);
    const int dim = features.dim(1);
    Prototypes p;
    std::vector<double> real_sum(static_cast<size_t>(dim), 0.0);
    std::vector<double> fake_sum(static_cast<size_t>(dim), 0.0);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        auto row = features.row_span(i);
        if (labels[static_cast<size_t>(i)] == 1) {
            for (int c = 0; c < dim; ++c) fake_sum[static_cast<size_t>(c)] += row[static_cast<size_t>(c)];
            p.fake_count += 1;
        } else {
            for (int c = 0; c < dim; ++c) real_sum[static_cast<size_t>(c)] += row[static_cast<size_t>(c)];
            p.real_count += 1;
        }
    }
    if (p.real_count > 0) {
        p.real = std::move(real_sum);
        for (auto& v : p.real) v /= p.real_count;
        if (norm(p.real) < kNormEpsilon) {
            throw DegeneratePrototypeError("real prototype norm below 1e-8 (N=" +
                                           std::to_string(p.real_count) + ")");
        }
    }
    if (p.fake_count > 0) {
        p.fake = std::move(fake_sum);
        for (auto& v : p.fake) v /= p.fake_count;
        if (norm(p.fake) < kNormEpsilon) {
            throw DegeneratePrototypeError("fake prototype norm below 1e-8 (M=" +
                                           std::to_string(p.fake_count) + ")");
        }
    }
    return p;
}

double pull_loss(const Tensor& features, std::span<const uint8_t> mask,
                 std::span<const int> labels, const Prototypes& protos) {
    const int n = features.dim(0);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        const auto& proto = labels[static_cast<size_t>(i)] == 1 ? protos.fake : protos.real;
        loss += 1.0 - cosine_sim(features.row_span(i), proto);
    }
    return loss;
}

void pull_loss_backward(const Tensor& features, std::span<const uint8_t> mask,
                        std::span<const int> labels, const Prototypes& protos,
                        double d_out, Tensor& d_features) {
    const int n = features.dim(0);
    const int dim = features.dim(1);
    std::vector<double> d_real_proto(static_cast<size_t>(dim), 0.0);
    std::vector<double> d_fake_proto(static_cast<size_t>(dim), 0.0);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        bool is_fake = labels[static_cast<size_t>(i)] == 1;
        const auto& proto = is_fake ? protos.fake : protos.real;
        auto& d_proto = is_fake ? d_fake_proto : d_real_proto;
        // d(1 - cos)/dcos = -1
        cosine_sim_grad_accum(features.row_span(i), proto, -d_out,
                              d_features.row_span(i), d_proto);
    }
    // Prototype means distribute their gradient over their members.
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        bool is_fake = labels[static_cast<size_t>(i)] == 1;
        const auto& d_proto = is_fake ? d_fake_proto : d_real_proto;
        double count = is_fake ? protos.fake_count : protos.real_count;
        auto row = d_features.row_span(i);
        for (int c = 0; c < dim; ++c) row[static_cast<size_t>(c)] += d_proto[static_cast<size_t>(c)] / count;
    }
}

namespace {

struct PushTerms {
    double exp_fr = 0.0;  // exp(sum over fakes of (cos(f_F, F_R) - 1))
    double exp_rf = 0.0;  // exp(sum over reals of (cos(f_R, F_F) - 1))
};

PushTerms push_terms(const Tensor& features, std::span<const uint8_t> mask,
                     std::span<const int> labels, const Prototypes& protos) {
    const int n = features.dim(0);
    double sum_fr = 0.0, sum_rf = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        if (labels[static_cast<size_t>(i)] == 1) {
            sum_fr += cosine_sim(features.row_span(i), protos.real) - 1.0;
        } else {
            sum_rf += cosine_sim(features.row_span(i), protos.fake) - 1.0;
        }
    }
    return {std::exp(sum_fr), std::exp(sum_rf)};
}

}  // namespace

double push_loss(const Tensor& features, std::span<const uint8_t> mask,
                 std::span<const int> labels, const Prototypes& protos) {
    if (!protos.has_real() || !protos.has_fake()) {
        throw NumericError("push_loss: both prototypes must be present");
    }
    PushTerms t = push_terms(features, mask, labels, protos);
    return t.exp_fr + t.exp_rf;
}

void push_loss_backward(const Tensor& features, std::span<const uint8_t> mask,
                        std::span<const int> labels, const Prototypes& protos,
                        double d_out, Tensor& d_features) {
    if (!protos.has_real() || !protos.has_fake()) {
        throw NumericError("push_loss_backward: both prototypes must be present");
    }
    const int n = features.dim(0);
    const int dim = features.dim(1);
    PushTerms t = push_terms(features, mask, labels, protos);
    std::vector<double> d_real_proto(static_cast<size_t>(dim), 0.0);
    std::vector<double> d_fake_proto(static_cast<size_t>(dim), 0.0);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        if (labels[static_cast<size_t>(i)] == 1) {
            // d(exp_fr)/d(cos(f_Fi, F_R)) = exp_fr
            cosine_sim_grad_accum(features.row_span(i), protos.real, d_out * t.exp_fr,
                                  d_features.row_span(i), d_real_proto);
        } else {
            cosine_sim_grad_accum(features.row_span(i), protos.fake, d_out * t.exp_rf,
                                  d_features.row_span(i), d_fake_proto);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        bool is_fake = labels[static_cast<size_t>(i)] == 1;
        // Each prototype is the mean over its own class members.
        const auto& d_proto = is_fake ? d_fake_proto : d_real_proto;
        double count = is_fake ? protos.fake_count : protos.real_count;
        auto row = d_features.row_span(i);
        for (int c = 0; c < dim; ++c) row[static_cast<size_t>(c)] += d_proto[static_cast<size_t>(c)] / count;
    }
}

LossBreakdown total_loss(double global_loss, double local_loss, double pull,
                         double push, const LossWeights& weights) {
    LossBreakdown b;
    b.global_ = global_loss;
    b.local = local_loss;
    b.pull = pull;
    b.push = push;
    b.total = ((global_loss + weights.lambda_local * local_loss) +
               weights.lambda_pull * pull) +
              weights.lambda_push * push;
    return b;
}

}  // namespace filter
