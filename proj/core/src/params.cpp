#include "filter/params.hpp"

#include <cmath>
#include <stdexcept>

#include "filter/errors.hpp"

namespace filter {

int ParamStore::add(std::string name, Tensor value) {
    if (contains(name)) throw Error("ParamStore: duplicate tensor name '" + name + "'");
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return count() - 1;
}

int ParamStore::find(std::string_view name) const {
    for (size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<int>(i);
    }
    return -1;
}

Tensor& ParamStore::tensor(std::string_view name) {
    int idx = find(name);
    if (idx < 0) throw Error("ParamStore: no tensor named '" + std::string(name) + "'");
    return values_[static_cast<size_t>(idx)];
}

const Tensor& ParamStore::tensor(std::string_view name) const {
    int idx = find(name);
    if (idx < 0) throw Error("ParamStore: no tensor named '" + std::string(name) + "'");
    return values_[static_cast<size_t>(idx)];
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& t : values_) n += t.size();
    return n;
}

ParamStore ParamStore::zeros_like() const {
    ParamStore out;
    for (int i = 0; i < count(); ++i) {
        out.add(names_[static_cast<size_t>(i)], Tensor::zeros(values_[static_cast<size_t>(i)].shape()));
    }
    return out;
}

void ParamStore::set_zero() {
    for (auto& t : values_) t.fill(0.0);
}

void ParamStore::add_scaled(const ParamStore& other, double scale) {
    if (other.count() != count()) throw Error("ParamStore::add_scaled: store mismatch");
    for (int i = 0; i < count(); ++i) {
        Tensor& dst = values_[static_cast<size_t>(i)];
        const Tensor& src = other.values_[static_cast<size_t>(i)];
        if (!dst.same_shape(src)) throw Error("ParamStore::add_scaled: shape mismatch");
        for (size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
    }
}

void ParamStore::scale(double factor) {
    for (auto& t : values_) {
        for (size_t k = 0; k < t.size(); ++k) t[k] *= factor;
    }
}

double ParamStore::squared_norm() const {
    double s = 0.0;
    for (const auto& t : values_) {
        for (size_t k = 0; k < t.size(); ++k) s += t[k] * t[k];
    }
    return s;
}

bool ParamStore::all_finite() const {
    for (const auto& t : values_) {
        if (!t.all_finite()) return false;
    }
    return true;
}

void ParamStore::flatten(std::span<double> out) const {
    if (out.size() != total_size()) throw Error("ParamStore::flatten: length mismatch");
    size_t pos = 0;
    for (const auto& t : values_) {
        for (size_t k = 0; k < t.size(); ++k) out[pos++] = t[k];
    }
}

void ParamStore::unflatten(std::span<const double> in) {
    if (in.size() != total_size()) throw Error("ParamStore::unflatten: length mismatch");
    size_t pos = 0;
    for (auto& t : values_) {
        for (size_t k = 0; k < t.size(); ++k) t[k] = in[pos++];
    }
}

}  // namespace filter
