#include "filter/synthetic.hpp"

#include <cmath>

#include "filter/errors.hpp"
#include "filter/numeric.hpp"
#include "filter/rng.hpp"

namespace filter {

void SyntheticConfig::validate() const {
    if (num_images <= 0) throw DatasetError("gen_synthetic: num_images must be positive");
    if (feature_dim < 2) throw DatasetError("gen_synthetic: feature_dim must be >= 2");
    if (faces_min < 1 || faces_max < faces_min) {
        throw DatasetError("gen_synthetic: invalid faces_per_image range");
    }
    if (!(fake_fraction > 0.0 && fake_fraction < 1.0)) {
        throw DatasetError("gen_synthetic: fake_fraction must be in (0,1)");
    }
    if (!(sigma >= 0.0)) throw DatasetError("gen_synthetic: sigma must be >= 0");
    if (!(theta > 0.0 && theta <= std::numbers::pi)) {
        throw DatasetError("gen_synthetic: theta must be in (0, pi]");
    }
}

namespace {

std::vector<double> normalized(std::vector<double> v) {
    double n = norm(v);
    if (n < kNormEpsilon) throw NumericError("gen_synthetic: degenerate direction");
    for (auto& x : v) x /= n;
    return v;
}

/// Exactly orthogonal companion of d (even dimension): coordinates are
/// swapped in adjacent pairs with one factor negated, with a random sign per
/// pair. Every product d[k]*e[k] cancels its pair neighbour exactly, so a
/// left-to-right dot product is exactly 0.0.
std::vector<double> orthogonal_signswap(const std::vector<double>& d, Rng& rng) {
    std::vector<double> e(d.size());
    for (size_t k = 0; k + 1 < d.size(); k += 2) {
        double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
        e[k] = -s * d[k + 1];
        e[k + 1] = s * d[k];
    }
    return e;
}

/// General companion at angle theta from d via Gram-Schmidt.
std::vector<double> companion_at_angle(const std::vector<double>& d, double theta, Rng& rng) {
    size_t dim = d.size();
    std::vector<double> e(dim);
    while (true) {
        std::vector<double> u = rng.unit_vector(static_cast<int>(dim));
        double proj = dot(u, d);
        double n2 = 0.0;
        for (size_t k = 0; k < dim; ++k) {
            e[k] = u[k] - proj * d[k];
            n2 += e[k] * e[k];
        }
        if (std::sqrt(n2) > 1e-6) {
            double n = std::sqrt(n2);
            for (auto& x : e) x /= n;
            break;
        }
    }
    double c = std::cos(theta), s = std::sin(theta);
    std::vector<double> g(dim);
    for (size_t k = 0; k < dim; ++k) g[k] = c * d[k] + s * e[k];
    return normalized(std::move(g));
}

}  // namespace

Dataset gen_synthetic(const SyntheticConfig& config, uint64_t seed) {
    config.validate();
    const int dim = config.feature_dim;
    const bool exact_orthogonal =
        config.theta == std::numbers::pi / 2 && dim % 2 == 0;

    Rng rng = Rng(seed).fork(0x5d17);
    Dataset ds;
    ds.feature_dim = dim;
    ds.split_tag = config.split_tag;
    ds.images.reserve(static_cast<size_t>(config.num_images));

    for (int i = 0; i < config.num_images; ++i) {
        ImageRecord img;
        img.image_id = "img" + std::to_string(i);
        int n_faces = rng.uniform_int(config.faces_min, config.faces_max);

        std::vector<int> labels(static_cast<size_t>(n_faces));
        for (auto& y : labels) y = rng.bernoulli(config.fake_fraction) ? 1 : 0;

        std::vector<double> d = rng.unit_vector(dim);
        std::vector<double> g = exact_orthogonal ? orthogonal_signswap(d, rng)
                                                 : companion_at_angle(d, config.theta, rng);

        for (int k = 0; k < n_faces; ++k) {
            FaceRecord face;
            face.face_id = img.image_id + "_f" + std::to_string(k);
            face.bbox = {10.0 * k, 0.0, 8.0, 8.0};
            face.label = labels[static_cast<size_t>(k)];
            const std::vector<double>& dir = face.label == 1 ? g : d;
            if (config.sigma == 0.0) {
                face.feature = dir;
            } else {
                std::vector<double> f(static_cast<size_t>(dim));
                for (int c = 0; c < dim; ++c) {
                    f[static_cast<size_t>(c)] =
                        dir[static_cast<size_t>(c)] + config.sigma * rng.normal();
                }
                face.feature = normalized(std::move(f));
            }
            img.faces.push_back(std::move(face));
        }
        img.label = image_label(labels);
        ds.images.push_back(std::move(img));
    }
    validate_dataset(ds);
    return ds;
}

}  // namespace filter
