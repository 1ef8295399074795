#include "filter/simmat.hpp"

#include <numeric>
#include <string>

#include "filter/errors.hpp"
#include "filter/numeric.hpp"
#include "filter/rng.hpp"

namespace filter {

std::vector<SimilarityGroup> build_groups(std::span<const ImageRecord> batch,
                                          int group_size, uint64_t seed) {
    if (group_size < 2) throw DatasetError("build_groups: group_size must be >= 2");
    if (batch.empty()) return {};

    const int dim = static_cast<int>(batch[0].faces.at(0).feature.size());

    std::vector<int> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    if (seed != 0) {
        Rng rng = Rng(seed).fork(0x9a0b);
        rng.shuffle(order);
    }

    auto new_group = [&]() {
        SimilarityGroup g;
        g.group_size = group_size;
        g.member_refs.assign(static_cast<size_t>(group_size), MemberRef{});
        g.mask.assign(static_cast<size_t>(group_size), 0);
        g.features = Tensor::zeros({group_size, dim});
        g.labels.assign(static_cast<size_t>(group_size), -1);
        return g;
    };

    std::vector<SimilarityGroup> groups;
    SimilarityGroup current = new_group();
    int next_slot = 0;

    for (int img_index : order) {
        const ImageRecord& img = batch[static_cast<size_t>(img_index)];
        int n_faces = static_cast<int>(img.faces.size());
        if (n_faces > group_size) {
            throw DatasetError("build_groups: image '" + img.image_id + "' has " +
                               std::to_string(n_faces) + " faces, more than group_size " +
                               std::to_string(group_size));
        }
        if (next_slot + n_faces > group_size) {
            groups.push_back(std::move(current));
            current = new_group();
            next_slot = 0;
        }
        for (int k = 0; k < n_faces; ++k) {
            const FaceRecord& face = img.faces[static_cast<size_t>(k)];
            int slot = next_slot + k;
            current.member_refs[static_cast<size_t>(slot)] = MemberRef{img_index, k};
            current.mask[static_cast<size_t>(slot)] = 1;
            current.labels[static_cast<size_t>(slot)] = face.label;
            if (static_cast<int>(face.feature.size()) != dim) {
                throw DatasetError("build_groups: inconsistent feature length in image '" +
                                   img.image_id + "'");
            }
            auto row = current.features.row_span(slot);
            for (int c = 0; c < dim; ++c) row[static_cast<size_t>(c)] = face.feature[static_cast<size_t>(c)];
            if (face.label == 1) {
                current.fake_count += 1;
            } else {
                current.real_count += 1;
            }
        }
        next_slot += n_faces;
    }
    if (next_slot > 0) groups.push_back(std::move(current));
    return groups;
}

Tensor build_simmat(const Tensor& features, std::span<const uint8_t> mask) {
    const int n = features.dim(0);
    Tensor sim = Tensor::zeros({n, n});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        auto fi = features.row_span(i);
        for (int j = i; j < n; ++j) {
            if (!mask[static_cast<size_t>(j)]) continue;
            double c = cosine_sim(fi, features.row_span(j));
            sim.at(i, j) = c;
            sim.at(j, i) = c;
        }
    }
    return sim;
}

Tensor build_simmat(const SimilarityGroup& group) {
    return build_simmat(group.features, group.mask);
}

Tensor simmat_backward(const Tensor& features, std::span<const uint8_t> mask,
                       const Tensor& d_sim) {
    const int n = features.dim(0);
    Tensor d_features = Tensor::zeros({features.dim(0), features.dim(1)});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int j = i + 1; j < n; ++j) {
            if (!mask[static_cast<size_t>(j)]) continue;
            // S(i,j) and S(j,i) are the same cosine node.
            double d_out = d_sim.at(i, j) + d_sim.at(j, i);
            if (d_out == 0.0) continue;
            cosine_sim_grad_accum(features.row_span(i), features.row_span(j), d_out,
                                  d_features.row_span(i), d_features.row_span(j));
        }
        // The diagonal cosine is identically 1; no gradient.
    }
    return d_features;
}

Tensor expand_channels(const Tensor& sim, std::span<const uint8_t> mask,
                       std::span<const double> w, std::span<const double> b) {
    if (w.size() != b.size() || w.empty()) {
        throw NumericError("expand_channels: need matching, non-empty w and b");
    }
    const int channels = static_cast<int>(w.size());
    const int n = sim.dim(0);
    Tensor maps = Tensor::zeros({channels, n, n});
    for (int c = 0; c < channels; ++c) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (mask[static_cast<size_t>(i)] && mask[static_cast<size_t>(j)]) {
                    maps.at(c, i, j) = w[static_cast<size_t>(c)] * sim.at(i, j) +
                                       b[static_cast<size_t>(c)];
                }
            }
        }
    }
    return maps;
}

ExpandChannelsGrad expand_channels_backward(const Tensor& sim,
                                            std::span<const uint8_t> mask,
                                            std::span<const double> w,
                                            const Tensor& d_maps) {
    const int channels = static_cast<int>(w.size());
    const int n = sim.dim(0);
    ExpandChannelsGrad grad;
    grad.d_sim = Tensor::zeros({n, n});
    grad.d_w.assign(w.size(), 0.0);
    grad.d_b.assign(w.size(), 0.0);
    for (int c = 0; c < channels; ++c) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (!(mask[static_cast<size_t>(i)] && mask[static_cast<size_t>(j)])) continue;
                double g = d_maps.at(c, i, j);
                grad.d_sim.at(i, j) += g * w[static_cast<size_t>(c)];
                grad.d_w[static_cast<size_t>(c)] += g * sim.at(i, j);
                grad.d_b[static_cast<size_t>(c)] += g;
            }
        }
    }
    return grad;
}

Tensor face_tokens(const Tensor& maps, std::span<const uint8_t> mask,
                   const Tensor& proj) {
    const int channels = maps.dim(0);
    const int n = maps.dim(1);
    const int concat_len = channels * n;
    if (proj.dim(0) != concat_len) {
        throw NumericError("face_tokens: proj rows " + std::to_string(proj.dim(0)) +
                           " != channels*group_size " + std::to_string(concat_len));
    }
    const int d_model = proj.dim(1);
    Tensor tokens = Tensor::zeros({n, d_model});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int c = 0; c < channels; ++c) {
            for (int j = 0; j < n; ++j) {
                double v = maps.at(c, i, j);
                if (v == 0.0) continue;
                int q = c * n + j;
                for (int k = 0; k < d_model; ++k) {
                    tokens.at(i, k) += v * proj.at(q, k);
                }
            }
        }
    }
    return tokens;
}

FaceTokensGrad face_tokens_backward(const Tensor& maps, std::span<const uint8_t> mask,
                                    const Tensor& proj, const Tensor& d_tokens) {
    const int channels = maps.dim(0);
    const int n = maps.dim(1);
    const int d_model = proj.dim(1);
    FaceTokensGrad grad;
    grad.d_maps = Tensor::zeros({channels, n, n});
    grad.d_proj = Tensor::zeros({proj.dim(0), proj.dim(1)});
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        for (int c = 0; c < channels; ++c) {
            for (int j = 0; j < n; ++j) {
                int q = c * n + j;
                double acc = 0.0;
                double v = maps.at(c, i, j);
                for (int k = 0; k < d_model; ++k) {
                    double g = d_tokens.at(i, k);
                    acc += g * proj.at(q, k);
                    grad.d_proj.at(q, k) += g * v;
                }
                grad.d_maps.at(c, i, j) = acc;
            }
        }
    }
    return grad;
}

}  // namespace filter
