#include "filter/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "filter/errors.hpp"
#include "filter/numeric.hpp"

namespace filter {

using json = nlohmann::ordered_json;

bool BBox::valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h) && w > 0 && h > 0;
}

double iou(const BBox& a, const BBox& b) {
    double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    double inter = ix * iy;
    double uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return inter / uni;
}

std::vector<std::optional<BoxAssignment>> assign_labels(std::span<const BBox> detected,
                                                        std::span<const GtBox> gt,
                                                        double threshold) {
    if (gt.empty()) throw DatasetError("assign_labels: ground-truth list is empty");
    std::vector<std::optional<BoxAssignment>> out;
    out.reserve(detected.size());
    for (const BBox& det : detected) {
        int best = 0;
        double best_iou = iou(det, gt[0].box);
        for (size_t j = 1; j < gt.size(); ++j) {
            double v = iou(det, gt[j].box);
            if (v > best_iou) {  // strict: ties keep the lowest index
                best_iou = v;
                best = static_cast<int>(j);
            }
        }
        if (best_iou >= threshold) {
            out.push_back(BoxAssignment{gt[static_cast<size_t>(best)].label, best, best_iou});
        } else {
            out.push_back(std::nullopt);
        }
    }
    return out;
}

int image_label(std::span<const int> face_labels) {
    if (face_labels.empty()) throw DatasetError("image_label: empty face list");
    int m = 0;
    for (int y : face_labels) m = std::max(m, y);
    return m;
}

std::size_t Dataset::face_count() const {
    std::size_t n = 0;
    for (const auto& img : images) n += img.faces.size();
    return n;
}

namespace {

void validate_face(const FaceRecord& face, int feature_dim, const std::string& where) {
    if (!face.bbox.valid()) {
        throw DatasetError(where + ": invalid bbox (w, h must be positive and finite)");
    }
    if (static_cast<int>(face.feature.size()) != feature_dim) {
        throw DatasetError(where + ": feature length " + std::to_string(face.feature.size()) +
                           " does not match declared feature_dim " + std::to_string(feature_dim));
    }
    double n2 = 0.0;
    for (double v : face.feature) {
        if (!std::isfinite(v)) throw DatasetError(where + ": non-finite feature value");
        n2 += v * v;
    }
    if (std::sqrt(n2) < kNormEpsilon) {
        throw DatasetError(where + ": feature norm below 1e-8");
    }
    if (face.label != 0 && face.label != 1) {
        throw DatasetError(where + ": face label must be 0 or 1");
    }
    if (face.score && (!std::isfinite(*face.score) || *face.score < 0 || *face.score > 1)) {
        throw DatasetError(where + ": face score outside [0,1]");
    }
}

}  // namespace

void validate_dataset(const Dataset& ds) {
    if (ds.feature_dim <= 0) throw DatasetError("dataset: feature_dim must be positive");
    std::unordered_set<std::string> seen_ids;
    for (const auto& img : ds.images) {
        const std::string where = "image '" + img.image_id + "'";
        if (!seen_ids.insert(img.image_id).second) {
            throw DatasetError(where + ": duplicate image_id");
        }
        if (img.faces.empty()) throw DatasetError(where + ": face list is empty");
        int max_label = 0;
        for (const auto& face : img.faces) {
            validate_face(face, ds.feature_dim, where + " face '" + face.face_id + "'");
            max_label = std::max(max_label, face.label);
        }
        if (img.label != max_label) {
            throw DatasetError(where + ": image label violates max rule (label " +
                               std::to_string(img.label) + ", max face label " +
                               std::to_string(max_label) + ")");
        }
        if (img.score && (!std::isfinite(*img.score) || *img.score < 0 || *img.score > 1)) {
            throw DatasetError(where + ": image score outside [0,1]");
        }
    }
}

namespace {

json face_to_json(const FaceRecord& face) {
    json j;
    j["face_id"] = face.face_id;
    j["bbox"] = {face.bbox.x, face.bbox.y, face.bbox.w, face.bbox.h};
    j["label"] = face.label;
    j["feature"] = face.feature;
    j["track_id"] = face.track_id ? json(*face.track_id) : json(nullptr);
    if (face.score) j["score"] = *face.score;
    return j;
}

FaceRecord face_from_json(const json& j, const std::string& where) {
    FaceRecord face;
    face.face_id = j.at("face_id").get<std::string>();
    const auto& bb = j.at("bbox");
    if (!bb.is_array() || bb.size() != 4) {
        throw DatasetError(where + ": bbox must be [x, y, w, h]");
    }
    face.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                 bb[3].get<double>()};
    face.label = j.at("label").get<int>();
    face.feature = j.at("feature").get<std::vector<double>>();
    if (j.contains("track_id") && !j["track_id"].is_null()) {
        face.track_id = j["track_id"].get<std::string>();
    }
    if (j.contains("score") && !j["score"].is_null()) {
        face.score = j["score"].get<double>();
    }
    return face;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset file: " + path.string());

    std::string line;
    size_t line_no = 0;
    Dataset ds;

    if (!std::getline(in, line)) throw DatasetError("dataset file is empty: " + path.string());
    ++line_no;
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DatasetError("line 1: header parse error: " + std::string(e.what()));
    }
    if (header.value("format", "") != "filter-ds") {
        throw DatasetError("line 1: header format must be \"filter-ds\"");
    }
    if (header.value("version", 0) != 1) {
        throw DatasetError("line 1: unsupported dataset version");
    }
    if (!header.contains("feature_dim")) {
        throw DatasetError("line 1: header missing feature_dim");
    }
    ds.feature_dim = header["feature_dim"].get<int>();
    ds.split_tag = header.value("split", "");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DatasetError("line " + std::to_string(line_no) +
                               ": parse error: " + std::string(e.what()));
        }
        try {
            ImageRecord img;
            img.image_id = j.at("image_id").get<std::string>();
            img.label = j.at("label").get<int>();
            if (j.contains("score") && !j["score"].is_null()) {
                img.score = j["score"].get<double>();
            }
            for (const auto& fj : j.at("faces")) {
                img.faces.push_back(face_from_json(fj, "image '" + img.image_id + "'"));
            }
            ds.images.push_back(std::move(img));
        } catch (const json::exception& e) {
            throw DatasetError("line " + std::to_string(line_no) +
                               ": malformed image record: " + std::string(e.what()));
        }
    }
    try {
        validate_dataset(ds);
    } catch (const DatasetError& e) {
        throw DatasetError(path.string() + ": " + e.what());
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    validate_dataset(ds);
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write dataset file: " + path.string());
    json header;
    header["format"] = "filter-ds";
    header["version"] = 1;
    header["feature_dim"] = ds.feature_dim;
    header["split"] = ds.split_tag;
    out << header.dump() << "\n";
    for (const auto& img : ds.images) {
        json j;
        j["image_id"] = img.image_id;
        j["label"] = img.label;
        if (img.score) j["score"] = *img.score;
        json faces = json::array();
        for (const auto& face : img.faces) faces.push_back(face_to_json(face));
        j["faces"] = std::move(faces);
        out << j.dump() << "\n";
    }
    if (!out) throw DatasetError("write failed: " + path.string());
}

}  // namespace filter
