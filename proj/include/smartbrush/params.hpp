#pragma once

#include "smartbrush/autograd.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace smartbrush {

/// Flat parameter vector partitioned into named, shaped slices.
class ParameterStore {
public:
    struct Slice {
        std::string name;
        std::vector<int> shape;
        std::size_t offset = 0;
        std::size_t size = 0;
    };

    void add(const std::string& name, const Tensor& init);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Slice& slice(const std::string& name) const;
    const std::vector<Slice>& slices() const { return slices_; }

    Tensor get(const std::string& name) const;
    void set(const std::string& name, const Tensor& value);

    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }
    std::size_t size() const { return flat_.size(); }

    /// Concatenated values of every slice whose name starts with `prefix`.
    std::vector<double> values(const std::string& prefix) const;
    /// True when both stores have the same slice names and shapes, in order.
    bool same_layout(const ParameterStore& other) const;

private:
    std::vector<Slice> slices_;
    std::map<std::string, std::size_t> index_;
    std::vector<double> flat_;
};

using SliceFilter = std::function<bool(const std::string& name)>;
SliceFilter prefix_filter(std::string prefix);

/// Graph handles for one forward pass. Slices accepted by the filter become
/// leaves; the rest are constants.
class Binding {
public:
    Binding(const ParameterStore& store, const SliceFilter& trainable);
    const ad::Var& operator[](const std::string& name) const;
    /// Flat gradient aligned with the store (zeros for constants).
    std::vector<double> gradient() const;

private:
    const ParameterStore* store_;
    std::map<std::string, ad::Var> vars_;
};

struct SgdConfig {
    double lr = 0.05;
    double momentum = 0.9;
    double clip_norm = 1.0;  // <= 0 disables clipping
};

/// Momentum SGD with global gradient-norm clipping. Only slices accepted by
/// the filter move; their velocity is kept per slice.
class MomentumSgd {
public:
    explicit MomentumSgd(std::size_t size) : velocity_(size, 0.0) {}
    /// Returns the pre-clip gradient norm over the updated slices.
    double step(ParameterStore& store, const std::vector<double>& grad, const SgdConfig& config, const SliceFilter& filter);

private:
    std::vector<double> velocity_;
};

/// Normal(0, stddev) tensor.
Tensor normal_tensor(std::vector<int> shape, double stddev, std::mt19937_64& rng);

}  // namespace smartbrush
