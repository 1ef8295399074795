#include "filter/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "filter/errors.hpp"

namespace filter {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw NumericError("roc_auc: length mismatch");
    const size_t n = scores.size();
    int64_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    int64_t n_neg = static_cast<int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw NumericError("roc_auc: both classes must be present");
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // rank2[i] = twice the average 1-based rank of item i (ties averaged).
    std::vector<int64_t> rank2(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        int64_t twice_avg = static_cast<int64_t>(i + 1) + static_cast<int64_t>(j + 1);
        for (size_t k = i; k <= j; ++k) rank2[order[k]] = twice_avg;
        i = j + 1;
    }

    int64_t pos_rank2_sum = 0;
    for (size_t k = 0; k < n; ++k) {
        if (labels[k] == 1) pos_rank2_sum += rank2[k];
    }
    // 2*U = sum of doubled positive ranks minus 2 * n_pos(n_pos+1)/2.
    int64_t u2 = pos_rank2_sum - n_pos * (n_pos + 1);
    return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_neg));
}

double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold) {
    if (scores.empty() || scores.size() != labels.size()) {
        throw NumericError("accuracy: empty input or length mismatch");
    }
    size_t correct = 0;
    for (size_t k = 0; k < scores.size(); ++k) {
        int pred = scores[k] >= threshold ? 1 : 0;
        correct += (pred == labels[k]);
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::vector<TrackScore> track_scores(const Dataset& ds) {
    std::vector<TrackScore> tracks;
    std::map<std::string, size_t> index;
    std::map<std::string, double> sums;
    for (const auto& img : ds.images) {
        for (const auto& face : img.faces) {
            if (!face.track_id) continue;
            if (!face.score) {
                throw DatasetError("track_scores: face '" + face.face_id + "' has no score");
            }
            auto [it, inserted] = index.try_emplace(*face.track_id, tracks.size());
            if (inserted) {
                tracks.push_back(TrackScore{*face.track_id, 0.0, 0, 0});
                sums[*face.track_id] = 0.0;
            }
            TrackScore& t = tracks[it->second];
            sums[*face.track_id] += *face.score;
            t.label = std::max(t.label, face.label);
            t.n_faces += 1;
        }
    }
    for (auto& t : tracks) t.score = sums[t.track_id] / t.n_faces;
    return tracks;
}

MetricsReport compute_metrics(const Dataset& scored, bool track_level) {
    MetricsReport report;
    std::vector<double> face_scores, image_scores;
    std::vector<int> face_labels, image_labels;
    for (const auto& img : scored.images) {
        if (!img.score) {
            throw DatasetError("compute_metrics: image '" + img.image_id + "' has no score");
        }
        image_scores.push_back(*img.score);
        image_labels.push_back(img.label);
        for (const auto& face : img.faces) {
            if (!face.score) {
                throw DatasetError("compute_metrics: face '" + face.face_id + "' has no score");
            }
            face_scores.push_back(*face.score);
            face_labels.push_back(face.label);
        }
    }
    report.n_faces = static_cast<int>(face_scores.size());
    report.n_images = static_cast<int>(image_scores.size());
    report.face_auc = roc_auc(face_scores, face_labels);
    report.face_acc = accuracy(face_scores, face_labels);
    report.image_auc = roc_auc(image_scores, image_labels);
    report.image_acc = accuracy(image_scores, image_labels);
    if (track_level) {
        auto tracks = track_scores(scored);
        if (!tracks.empty()) {
            std::vector<double> ts;
            std::vector<int> tl;
            for (const auto& t : tracks) {
                ts.push_back(t.score);
                tl.push_back(t.label);
            }
            report.track_auc = roc_auc(ts, tl);
            report.track_acc = accuracy(ts, tl);
        }
    }
    return report;
}

std::string metrics_to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["face_auc"] = report.face_auc;
    j["face_acc"] = report.face_acc;
    j["image_auc"] = report.image_auc;
    j["image_acc"] = report.image_acc;
    if (report.track_auc) j["track_auc"] = *report.track_auc;
    if (report.track_acc) j["track_acc"] = *report.track_acc;
    j["n_faces"] = report.n_faces;
    j["n_images"] = report.n_images;
    return j.dump(2);
}

void write_metrics_report(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write metrics report: " + path.string());
    out << metrics_to_json(report) << "\n";
}

void export_overlay(const ImageRecord& image, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["image_id"] = image.image_id;
    j["label"] = image.label;
    j["score"] = image.score ? nlohmann::ordered_json(*image.score)
                             : nlohmann::ordered_json(nullptr);
    auto faces = nlohmann::ordered_json::array();
    for (const auto& face : image.faces) {
        if (!face.score) {
            throw DatasetError("export_overlay: face '" + face.face_id + "' has no score");
        }
        nlohmann::ordered_json f;
        f["face_id"] = face.face_id;
        f["bbox"] = {face.bbox.x, face.bbox.y, face.bbox.w, face.bbox.h};
        f["gt_label"] = face.label;
        f["score"] = *face.score;
        f["predicted"] = *face.score >= 0.5;
        faces.push_back(std::move(f));
    }
    j["faces"] = std::move(faces);
    std::ofstream out(path);
    if (!out) throw Error("cannot write overlay file: " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace filter
