#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "filter/tensor.hpp"

namespace filter {

/// Ordered collection of named tensors. Registration order is the canonical
/// order everywhere: initialization draws, checkpoint manifests, optimizer
/// state, and flattening all follow it.
class ParamStore {
public:
    int add(std::string name, Tensor value);
    int find(std::string_view name) const;  // -1 when absent
    bool contains(std::string_view name) const { return find(name) >= 0; }

    int count() const { return static_cast<int>(values_.size()); }
    const std::string& name(int idx) const { return names_[static_cast<size_t>(idx)]; }
    Tensor& tensor(int idx) { return values_[static_cast<size_t>(idx)]; }
    const Tensor& tensor(int idx) const { return values_[static_cast<size_t>(idx)]; }
    Tensor& tensor(std::string_view name);
    const Tensor& tensor(std::string_view name) const;

    std::size_t total_size() const;

    /// Same names and shapes, all values zero.
    ParamStore zeros_like() const;

    void set_zero();
    void add_scaled(const ParamStore& other, double scale);  // this += scale * other
    void scale(double factor);
    double squared_norm() const;
    bool all_finite() const;

    void flatten(std::span<double> out) const;
    void unflatten(std::span<const double> in);

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

}  // namespace filter
