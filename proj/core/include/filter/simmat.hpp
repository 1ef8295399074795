#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "filter/dataset.hpp"
#include "filter/tensor.hpp"

namespace filter {

struct MemberRef {
    int image_index = -1;  // index into the batch passed to build_groups
    int face_index = -1;
};

/// A fixed-size pack of faces over which the self-similarity matrix and the
/// metric losses are computed. Slots beyond the packed faces carry
/// mask = 0 and contribute to nothing downstream.
struct SimilarityGroup {
    int group_size = 0;
    std::vector<MemberRef> member_refs;  // size group_size
    std::vector<uint8_t> mask;           // 1 = face present
    Tensor features;                     // group_size x D, zero rows where masked
    std::vector<int> labels;             // -1 where masked
    int real_count = 0;                  // N
    int fake_count = 0;                  // M

    int occupied() const { return real_count + fake_count; }
};

/// Packs whole images into groups of `group_size` slots, in batch order.
/// An image's faces are never split across groups; the last group is padded
/// with masked slots. `seed` != 0 shuffles the image order first (the
/// training loop passes 0 and shuffles at the epoch level). Throws
/// DatasetError if any single image has more faces than group_size.
std::vector<SimilarityGroup> build_groups(std::span<const ImageRecord> batch,
                                          int group_size, uint64_t seed = 0);

/// Self-similarity matrix S: S[i][j] = cosine_sim(f_i, f_j) on unmasked
/// pairs, 0 where either slot is masked. Symmetric by construction (the
/// upper triangle is mirrored) with exact unit diagonal on unmasked slots.
Tensor build_simmat(const Tensor& features, std::span<const uint8_t> mask);
Tensor build_simmat(const SimilarityGroup& group);

/// Backward: given dL/dS, accumulates dL/dfeatures. The unit diagonal has
/// zero gradient.
Tensor simmat_backward(const Tensor& features, std::span<const uint8_t> mask,
                       const Tensor& d_sim);

/// Multi-channel correlation maps: per channel c, map_c = w[c]*S + b[c] on
/// unmasked entries and 0 on masked entries. Shape C x n x n.
Tensor expand_channels(const Tensor& sim, std::span<const uint8_t> mask,
                       std::span<const double> w, std::span<const double> b);

struct ExpandChannelsGrad {
    Tensor d_sim;
    std::vector<double> d_w;
    std::vector<double> d_b;
};

ExpandChannelsGrad expand_channels_backward(const Tensor& sim,
                                            std::span<const uint8_t> mask,
                                            std::span<const double> w,
                                            const Tensor& d_maps);

/// Per-face tokens for the encoder: token_i = proj^T applied to the
/// concatenation of row i of every channel map (length C*n). Masked slots
/// yield zero tokens. proj has shape (C*n) x d_model.
Tensor face_tokens(const Tensor& maps, std::span<const uint8_t> mask,
                   const Tensor& proj);

struct FaceTokensGrad {
    Tensor d_maps;
    Tensor d_proj;
};

FaceTokensGrad face_tokens_backward(const Tensor& maps, std::span<const uint8_t> mask,
                                    const Tensor& proj, const Tensor& d_tokens);

}  // namespace filter
