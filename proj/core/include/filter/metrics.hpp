#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "filter/dataset.hpp"

namespace filter {

/// ROC-AUC as the Mann-Whitney statistic P(score_fake > score_real) with
/// half credit for ties, computed by sort-and-rank. The rank sum is carried
/// in doubled integer units, so the result is exact and matches a pairwise
/// count bit-for-bit. Throws NumericError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of items with (score >= threshold) == label. Throws NumericError
/// on empty input.
double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

struct TrackScore {
    std::string track_id;
    double score = 0.0;  // mean of the track's face scores
    int label = 0;       // max of the track's face labels
    int n_faces = 0;
};

/// Groups scored faces by track_id (faces without one are skipped) and
/// averages their scores. Order follows first appearance in the dataset.
std::vector<TrackScore> track_scores(const Dataset& ds);

struct MetricsReport {
    double face_auc = 0.0;
    double face_acc = 0.0;
    double image_auc = 0.0;
    double image_acc = 0.0;
    std::optional<double> track_auc;
    std::optional<double> track_acc;
    int n_faces = 0;
    int n_images = 0;
};

/// Computes the report from a dataset whose face and image scores are set.
/// Track metrics are filled only when `track_level` is set and the dataset
/// carries track ids.
MetricsReport compute_metrics(const Dataset& scored, bool track_level);

std::string metrics_to_json(const MetricsReport& report);
void write_metrics_report(const MetricsReport& report, const std::filesystem::path& path);

/// Writes the per-face annotation file for one image: bbox, ground truth,
/// score, and thresholded prediction per face. Throws DatasetError when a
/// face score is missing.
void export_overlay(const ImageRecord& image, const std::filesystem::path& path);

}  // namespace filter
