#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "filter/tensor.hpp"

namespace filter {

inline constexpr double kLayerNormEpsilon = 1e-5;

struct EncoderDims {
    int d_model = 128;
    int heads = 4;
    int d_ff = 256;

    int head_dim() const { return d_model / heads; }
    void validate() const;
};

/// Non-owning views of the encoder weights (tensors live in a ParamStore).
struct EncoderWeights {
    const Tensor* w_q = nullptr;  // d_model x d_model
    const Tensor* w_k = nullptr;
    const Tensor* w_v = nullptr;
    const Tensor* w_o = nullptr;
    const Tensor* ln1_gain = nullptr;  // d_model
    const Tensor* ln1_bias = nullptr;
    const Tensor* ln2_gain = nullptr;
    const Tensor* ln2_bias = nullptr;
    const Tensor* ffn_w1 = nullptr;  // d_model x d_ff
    const Tensor* ffn_b1 = nullptr;  // d_ff
    const Tensor* ffn_w2 = nullptr;  // d_ff x d_model
    const Tensor* ffn_b2 = nullptr;  // d_model
};

struct EncoderGrads {
    Tensor* w_q = nullptr;
    Tensor* w_k = nullptr;
    Tensor* w_v = nullptr;
    Tensor* w_o = nullptr;
    Tensor* ln1_gain = nullptr;
    Tensor* ln1_bias = nullptr;
    Tensor* ln2_gain = nullptr;
    Tensor* ln2_bias = nullptr;
    Tensor* ffn_w1 = nullptr;
    Tensor* ffn_b1 = nullptr;
    Tensor* ffn_w2 = nullptr;
    Tensor* ffn_b2 = nullptr;
};

struct LayerNormStats {
    std::vector<double> mean;
    std::vector<double> inv_std;
};

struct EncoderCache {
    Tensor q, k, v;    // n x d_model
    Tensor attn;       // heads x n x n
    Tensor ctx;        // n x d_model
    Tensor attn_out;   // n x d_model
    Tensor h1;         // n x d_model
    LayerNormStats ln1;
    Tensor u;          // n x d_model
    Tensor ffn_pre;    // n x d_ff
    Tensor ffn_act;    // n x d_ff
    Tensor ffn_out;    // n x d_model
    Tensor h2;         // n x d_model
    LayerNormStats ln2;
};

/// Single encoder block over face tokens: multi-head attention with masked
/// softmax (masked keys excluded), residual, layer-norm, FFN, residual,
/// layer-norm. Masked slots output zero rows and never influence unmasked
/// ones. Reductions over the slot axis use value-ordered summation, so a
/// joint permutation of (tokens, mask) permutes the outputs bit-for-bit.
/// Throws NumericError when every slot is masked.
Tensor encoder_forward(const Tensor& tokens, std::span<const uint8_t> mask,
                       const EncoderWeights& weights, const EncoderDims& dims,
                       EncoderCache* cache = nullptr);

/// Accumulates weight gradients into `grads` and returns d_tokens.
Tensor encoder_backward(const Tensor& tokens, std::span<const uint8_t> mask,
                        const EncoderWeights& weights, const EncoderDims& dims,
                        const EncoderCache& cache, const Tensor& d_out,
                        EncoderGrads& grads);

struct LocalHeadOut {
    std::vector<double> logit;  // per slot, 0 where masked
    std::vector<double> score;  // logistic(logit), 0 where masked
};

/// Per-face prediction head: logistic(W . F_i + b) on unmasked slots.
LocalHeadOut local_head_forward(const Tensor& features, std::span<const uint8_t> mask,
                                std::span<const double> w, double b);

/// d_score is the upstream gradient w.r.t. each slot's score. Accumulates
/// into d_features, d_w, d_b.
void local_head_backward(const Tensor& features, std::span<const uint8_t> mask,
                         std::span<const double> w, const LocalHeadOut& out,
                         std::span<const double> d_score, Tensor& d_features,
                         std::span<double> d_w, double& d_b);

}  // namespace filter
