#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace filter {

/// Axis-aligned box, pixel units, (x, y) = top-left corner. w and h must be
/// positive and all coordinates finite.
struct BBox {
    double x = 0, y = 0, w = 0, h = 0;
    double area() const { return w * h; }
    bool valid() const;
};

/// Intersection over union, in [0, 1]. Symmetric; 1 for identical boxes,
/// 0 for disjoint ones.
double iou(const BBox& a, const BBox& b);

struct GtBox {
    BBox box;
    int label = 0;  // 0 = real, 1 = fake
};

struct BoxAssignment {
    int label = 0;
    int gt_index = 0;
    double iou = 0.0;
};

/// Assigns each detected box the label of its maximum-IoU ground truth box
/// when that IoU reaches `threshold`; entries below threshold come back as
/// nullopt (unmatched). Ties on IoU resolve to the lowest ground-truth index.
/// Throws DatasetError if `gt` is empty.
std::vector<std::optional<BoxAssignment>> assign_labels(std::span<const BBox> detected,
                                                        std::span<const GtBox> gt,
                                                        double threshold = 0.5);

/// Image-level label: max over the face labels. Throws DatasetError on an
/// empty list.
int image_label(std::span<const int> face_labels);

struct FaceRecord {
    std::string face_id;
    BBox bbox;
    std::vector<double> feature;  // backbone embedding, length = Dataset::feature_dim
    int label = 0;                // 0 = real, 1 = fake
    std::optional<double> score;  // model prediction in [0,1]
    std::optional<std::string> track_id;
};

struct ImageRecord {
    std::string image_id;
    std::vector<FaceRecord> faces;
    int label = 0;
    std::optional<double> score;
};

struct Dataset {
    int feature_dim = 0;
    std::vector<ImageRecord> images;
    std::string split_tag;

    std::size_t face_count() const;
};

/// Checks every invariant: non-empty face lists, feature lengths, positive
/// feature norms, label values, score ranges, unique image ids, and the
/// image-label = max(face labels) relation. Throws DatasetError.
void validate_dataset(const Dataset& ds);

/// Reads the JSONL dataset format (header line + one image per line).
/// Errors report the offending line number. The loaded dataset is validated.
Dataset load_dataset(const std::filesystem::path& path);

/// Writes the JSONL dataset format. Feature values are serialized with
/// shortest round-trip decimals, so load(save(ds)) == ds bit-for-bit.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

}  // namespace filter
