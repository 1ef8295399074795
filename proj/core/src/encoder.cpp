#include "filter/encoder.hpp"

#include <cmath>

#include "filter/errors.hpp"
#include "filter/numeric.hpp"

namespace filter {

void EncoderDims::validate() const {
    if (d_model <= 0 || heads <= 0 || d_ff <= 0) {
        throw NumericError("encoder dims must be positive");
    }
    if (d_model % heads != 0) {
        throw NumericError("d_model " + std::to_string(d_model) +
                           " not divisible by heads " + std::to_string(heads));
    }
}

namespace {

// y = x * W for the unmasked rows (x: n x a, W: a x b).
void matmul_rows(const Tensor& x, const Tensor& w, std::span<const uint8_t> mask,
                 Tensor& y) {
    const int n = x.dim(0), a = x.dim(1), b = w.dim(1);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int col = 0; col < b; ++col) {
            double s = 0.0;
            for (int row = 0; row < a; ++row) s += x.at(i, row) * w.at(row, col);
            y.at(i, col) = s;
        }
    }
}

// dX += dY * W^T and dW += X^T * dY over unmasked rows.
void matmul_rows_backward(const Tensor& x, const Tensor& w,
                          std::span<const uint8_t> mask, const Tensor& d_y,
                          Tensor& d_x, Tensor& d_w) {
    const int n = x.dim(0), a = x.dim(1), b = w.dim(1);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int row = 0; row < a; ++row) {
            double acc = 0.0;
            for (int col = 0; col < b; ++col) {
                double g = d_y.at(i, col);
                acc += g * w.at(row, col);
                d_w.at(row, col) += x.at(i, row) * g;
            }
            d_x.at(i, row) += acc;
        }
    }
}

void layer_norm_forward(const Tensor& x, std::span<const uint8_t> mask,
                        const Tensor& gain, const Tensor& bias, Tensor& y,
                        LayerNormStats& stats) {
    const int n = x.dim(0), d = x.dim(1);
    stats.mean.assign(static_cast<size_t>(n), 0.0);
    stats.inv_std.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        double mean = 0.0;
        for (int c = 0; c < d; ++c) mean += x.at(i, c);
        mean /= d;
        double var = 0.0;
        for (int c = 0; c < d; ++c) {
            double dev = x.at(i, c) - mean;
            var += dev * dev;
        }
        var /= d;
        double inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        stats.mean[static_cast<size_t>(i)] = mean;
        stats.inv_std[static_cast<size_t>(i)] = inv_std;
        for (int c = 0; c < d; ++c) {
            double xhat = (x.at(i, c) - mean) * inv_std;
            y.at(i, c) = gain.at(c) * xhat + bias.at(c);
        }
    }
}

void layer_norm_backward(const Tensor& x, std::span<const uint8_t> mask,
                         const Tensor& gain, const LayerNormStats& stats,
                         const Tensor& d_y, Tensor& d_x, Tensor& d_gain,
                         Tensor& d_bias) {
    const int n = x.dim(0), d = x.dim(1);
    std::vector<double> d_xhat(static_cast<size_t>(d));
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        const double mean = stats.mean[static_cast<size_t>(i)];
        const double inv_std = stats.inv_std[static_cast<size_t>(i)];
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int c = 0; c < d; ++c) {
            double xhat = (x.at(i, c) - mean) * inv_std;
            double g = d_y.at(i, c);
            d_gain.at(c) += g * xhat;
            d_bias.at(c) += g;
            double dxh = g * gain.at(c);
            d_xhat[static_cast<size_t>(c)] = dxh;
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat;
        }
        for (int c = 0; c < d; ++c) {
            double xhat = (x.at(i, c) - mean) * inv_std;
            d_x.at(i, c) += inv_std * (d_xhat[static_cast<size_t>(c)] - sum_dxhat / d -
                                       xhat * sum_dxhat_xhat / d);
        }
    }
}

}  // namespace

Tensor encoder_forward(const Tensor& tokens, std::span<const uint8_t> mask,
                       const EncoderWeights& w, const EncoderDims& dims,
                       EncoderCache* cache) {
    dims.validate();
    const int n = tokens.dim(0);
    const int dm = dims.d_model;
    const int heads = dims.heads;
    const int dh = dims.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    bool any_unmasked = false;
    for (int i = 0; i < n; ++i) any_unmasked |= (mask[static_cast<size_t>(i)] != 0);
    if (!any_unmasked) throw NumericError("encoder_forward: all slots masked");

    EncoderCache local;
    EncoderCache& c = cache ? *cache : local;
    c.q = Tensor::zeros({n, dm});
    c.k = Tensor::zeros({n, dm});
    c.v = Tensor::zeros({n, dm});
    matmul_rows(tokens, *w.w_q, mask, c.q);
    matmul_rows(tokens, *w.w_k, mask, c.k);
    matmul_rows(tokens, *w.w_v, mask, c.v);

    c.attn = Tensor::zeros({heads, n, n});
    c.ctx = Tensor::zeros({n, dm});
    std::vector<double> logits(static_cast<size_t>(n));
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(n));
    for (int h = 0; h < heads; ++h) {
        const int off = h * dh;
        for (int i = 0; i < n; ++i) {
            if (!mask[static_cast<size_t>(i)]) continue;
            for (int j = 0; j < n; ++j) {
                if (!mask[static_cast<size_t>(j)]) {
                    logits[static_cast<size_t>(j)] = 0.0;
                    continue;
                }
                double s = 0.0;
                for (int d = 0; d < dh; ++d) s += c.q.at(i, off + d) * c.k.at(j, off + d);
                logits[static_cast<size_t>(j)] = s * scale;
            }
            std::vector<double> probs = softmax_masked(logits, mask);
            for (int j = 0; j < n; ++j) c.attn.at(h, i, j) = probs[static_cast<size_t>(j)];
            // Weighted value sum in value order: invariant under slot permutation.
            for (int d = 0; d < dh; ++d) {
                terms.clear();
                for (int j = 0; j < n; ++j) {
                    if (!mask[static_cast<size_t>(j)]) continue;
                    terms.push_back(probs[static_cast<size_t>(j)] * c.v.at(j, off + d));
                }
                c.ctx.at(i, off + d) = ordered_sum(terms);
            }
        }
    }

    c.attn_out = Tensor::zeros({n, dm});
    matmul_rows(c.ctx, *w.w_o, mask, c.attn_out);

    c.h1 = Tensor::zeros({n, dm});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int d = 0; d < dm; ++d) c.h1.at(i, d) = tokens.at(i, d) + c.attn_out.at(i, d);
    }

    c.u = Tensor::zeros({n, dm});
    layer_norm_forward(c.h1, mask, *w.ln1_gain, *w.ln1_bias, c.u, c.ln1);

    c.ffn_pre = Tensor::zeros({n, dims.d_ff});
    matmul_rows(c.u, *w.ffn_w1, mask, c.ffn_pre);
    c.ffn_act = Tensor::zeros({n, dims.d_ff});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int f = 0; f < dims.d_ff; ++f) {
            double pre = c.ffn_pre.at(i, f) + w.ffn_b1->at(f);
            c.ffn_pre.at(i, f) = pre;
            c.ffn_act.at(i, f) = pre > 0.0 ? pre : 0.0;
        }
    }
    c.ffn_out = Tensor::zeros({n, dm});
    matmul_rows(c.ffn_act, *w.ffn_w2, mask, c.ffn_out);

    c.h2 = Tensor::zeros({n, dm});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int d = 0; d < dm; ++d) {
            c.h2.at(i, d) = c.u.at(i, d) + c.ffn_out.at(i, d) + w.ffn_b2->at(d);
        }
    }

    Tensor out = Tensor::zeros({n, dm});
    layer_norm_forward(c.h2, mask, *w.ln2_gain, *w.ln2_bias, out, c.ln2);
    return out;
}

Tensor encoder_backward(const Tensor& tokens, std::span<const uint8_t> mask,
                        const EncoderWeights& w, const EncoderDims& dims,
                        const EncoderCache& c, const Tensor& d_out,
                        EncoderGrads& g) {
    const int n = tokens.dim(0);
    const int dm = dims.d_model;
    const int heads = dims.heads;
    const int dh = dims.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // LN2 -> d_h2
    Tensor d_h2 = Tensor::zeros({n, dm});
    layer_norm_backward(c.h2, mask, *w.ln2_gain, c.ln2, d_out, d_h2, *g.ln2_gain,
                        *g.ln2_bias);

    // h2 = u + ffn_act*W2 + b2
    Tensor d_u = d_h2;  // residual branch
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int d = 0; d < dm; ++d) g.ffn_b2->at(d) += d_h2.at(i, d);
    }
    Tensor d_act = Tensor::zeros({n, dims.d_ff});
    matmul_rows_backward(c.ffn_act, *w.ffn_w2, mask, d_h2, d_act, *g.ffn_w2);

    // relu and first FFN layer (bias b1 was folded into ffn_pre)
    Tensor d_pre = Tensor::zeros({n, dims.d_ff});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int f = 0; f < dims.d_ff; ++f) {
            double gpre = c.ffn_pre.at(i, f) > 0.0 ? d_act.at(i, f) : 0.0;
            d_pre.at(i, f) = gpre;
            g.ffn_b1->at(f) += gpre;
        }
    }
    matmul_rows_backward(c.u, *w.ffn_w1, mask, d_pre, d_u, *g.ffn_w1);

    // LN1 -> d_h1
    Tensor d_h1 = Tensor::zeros({n, dm});
    layer_norm_backward(c.h1, mask, *w.ln1_gain, c.ln1, d_u, d_h1, *g.ln1_gain,
                        *g.ln1_bias);

    // h1 = tokens + ctx*Wo
    Tensor d_tokens = d_h1;
    Tensor d_ctx = Tensor::zeros({n, dm});
    matmul_rows_backward(c.ctx, *w.w_o, mask, d_h1, d_ctx, *g.w_o);

    // attention
    Tensor d_q = Tensor::zeros({n, dm});
    Tensor d_k = Tensor::zeros({n, dm});
    Tensor d_v = Tensor::zeros({n, dm});
    std::vector<double> d_attn_row(static_cast<size_t>(n));
    for (int h = 0; h < heads; ++h) {
        const int off = h * dh;
        for (int i = 0; i < n; ++i) {
            if (!mask[static_cast<size_t>(i)]) continue;
            double inner = 0.0;  // sum_j a_ij * da_ij for the softmax backward
            for (int j = 0; j < n; ++j) {
                if (!mask[static_cast<size_t>(j)]) {
                    d_attn_row[static_cast<size_t>(j)] = 0.0;
                    continue;
                }
                double da = 0.0;
                double a = c.attn.at(h, i, j);
                for (int d = 0; d < dh; ++d) {
                    double gc = d_ctx.at(i, off + d);
                    da += gc * c.v.at(j, off + d);
                    d_v.at(j, off + d) += a * gc;
                }
                d_attn_row[static_cast<size_t>(j)] = da;
                inner += a * da;
            }
            for (int j = 0; j < n; ++j) {
                if (!mask[static_cast<size_t>(j)]) continue;
                double dl = c.attn.at(h, i, j) * (d_attn_row[static_cast<size_t>(j)] - inner);
                if (dl == 0.0) continue;
                double dls = dl * scale;
                for (int d = 0; d < dh; ++d) {
                    d_q.at(i, off + d) += dls * c.k.at(j, off + d);
                    d_k.at(j, off + d) += dls * c.q.at(i, off + d);
                }
            }
        }
    }

    matmul_rows_backward(tokens, *w.w_q, mask, d_q, d_tokens, *g.w_q);
    matmul_rows_backward(tokens, *w.w_k, mask, d_k, d_tokens, *g.w_k);
    matmul_rows_backward(tokens, *w.w_v, mask, d_v, d_tokens, *g.w_v);

    // Masked rows carry no gradient.
    for (int i = 0; i < n; ++i) {
        if (mask[static_cast<size_t>(i)]) continue;
        for (int d = 0; d < dm; ++d) d_tokens.at(i, d) = 0.0;
    }
    return d_tokens;
}

LocalHeadOut local_head_forward(const Tensor& features, std::span<const uint8_t> mask,
                                std::span<const double> w, double b) {
    const int n = features.dim(0);
    LocalHeadOut out;
    out.logit.assign(static_cast<size_t>(n), 0.0);
    out.score.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        double z = dot(features.row_span(i), w) + b;
        out.logit[static_cast<size_t>(i)] = z;
        out.score[static_cast<size_t>(i)] = logistic(z);
    }
    return out;
}

void local_head_backward(const Tensor& features, std::span<const uint8_t> mask,
                         std::span<const double> w, const LocalHeadOut& out,
                         std::span<const double> d_score, Tensor& d_features,
                         std::span<double> d_w, double& d_b) {
    const int n = features.dim(0);
    const int d = features.dim(1);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        double s = out.score[static_cast<size_t>(i)];
        double dz = d_score[static_cast<size_t>(i)] * s * (1.0 - s);
        if (dz == 0.0) continue;
        for (int cIdx = 0; cIdx < d; ++cIdx) {
            d_w[static_cast<size_t>(cIdx)] += dz * features.at(i, cIdx);
            d_features.at(i, cIdx) += dz * w[static_cast<size_t>(cIdx)];
        }
        d_b += dz;
    }
}

}  // namespace filter
