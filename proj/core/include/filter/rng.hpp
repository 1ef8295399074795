#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace filter {

uint64_t splitmix64(uint64_t x);

/// Deterministic random source. The raw generator is std::mt19937_64 (whose
/// output sequence is fixed by the standard); all distribution transforms are
/// implemented here instead of with std::*_distribution so that streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (pairs cached).
    double normal();

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi);

    bool bernoulli(double p);

    /// Uniform direction on the unit sphere in R^dim.
    std::vector<double> unit_vector(int dim);

    /// Derive an independent stream; forking with distinct ids decouples
    /// consumers from each other's draw counts.
    Rng fork(uint64_t stream_id) const;

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t seed_;
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace filter
