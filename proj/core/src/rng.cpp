#include "filter/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace filter {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

uint64_t Rng::next_u64() { return gen_(); }

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 in (0,1] so the log is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

int Rng::uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
    uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
    // Rejection sampling for an unbiased draw.
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::vector<double> Rng::unit_vector(int dim) {
    std::vector<double> v(static_cast<size_t>(dim));
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = normal();
            norm += x * x;
        }
    } while (norm < 1e-24);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

Rng Rng::fork(uint64_t stream_id) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream_id)));
}

}  // namespace filter
