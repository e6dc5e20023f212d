#include "smartbrush/params.hpp"

#include "smartbrush/error.hpp"

#include <cmath>

namespace smartbrush {

void ParameterStore::add(const std::string& name, const Tensor& init) {
    if (contains(name)) fail(ErrorKind::InvalidArgument, "duplicate parameter slice " + name);
    Slice s{name, init.shape(), flat_.size(), init.size()};
    flat_.insert(flat_.end(), init.data().begin(), init.data().end());
    index_[name] = slices_.size();
    slices_.push_back(std::move(s));
}

const ParameterStore::Slice& ParameterStore::slice(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::NotFound, "unknown parameter slice " + name);
    return slices_[it->second];
}

Tensor ParameterStore::get(const std::string& name) const {
    const Slice& s = slice(name);
    const auto begin = flat_.begin() + static_cast<std::ptrdiff_t>(s.offset);
    return Tensor(s.shape, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(s.size)));
}

void ParameterStore::set(const std::string& name, const Tensor& value) {
    const Slice& s = slice(name);
    if (value.shape() != s.shape)
        fail(ErrorKind::ShapeMismatch, "parameter " + name + " expects " + Tensor(s.shape).shape_string() + ", got " +
                                           value.shape_string());
    std::copy(value.data().begin(), value.data().end(), flat_.begin() + static_cast<std::ptrdiff_t>(s.offset));
}

std::vector<double> ParameterStore::values(const std::string& prefix) const {
    std::vector<double> out;
    for (const Slice& s : slices_)
        if (s.name.rfind(prefix, 0) == 0) {
            const auto begin = flat_.begin() + static_cast<std::ptrdiff_t>(s.offset);
            out.insert(out.end(), begin, begin + static_cast<std::ptrdiff_t>(s.size));
        }
    return out;
}

bool ParameterStore::same_layout(const ParameterStore& other) const {
    if (slices_.size() != other.slices_.size()) return false;
    for (std::size_t i = 0; i < slices_.size(); ++i)
        if (slices_[i].name != other.slices_[i].name || slices_[i].shape != other.slices_[i].shape) return false;
    return true;
}

SliceFilter prefix_filter(std::string prefix) {
    return [p = std::move(prefix)](const std::string& name) { return name.rfind(p, 0) == 0; };
}

Binding::Binding(const ParameterStore& store, const SliceFilter& trainable) : store_(&store) {
    for (const auto& s : store.slices())
        vars_.emplace(s.name, trainable && trainable(s.name) ? ad::leaf(store.get(s.name)) : ad::constant(store.get(s.name)));
}

const ad::Var& Binding::operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) fail(ErrorKind::NotFound, "unknown parameter slice " + name);
    return it->second;
}

std::vector<double> Binding::gradient() const {
    std::vector<double> g(store_->size(), 0.0);
    for (const auto& s : store_->slices()) {
        const ad::Var& v = vars_.at(s.name);
        if (!v.requires_grad() || v.grad().empty()) continue;
        std::copy(v.grad().data().begin(), v.grad().data().end(), g.begin() + static_cast<std::ptrdiff_t>(s.offset));
    }
    return g;
}

double MomentumSgd::step(ParameterStore& store, const std::vector<double>& grad, const SgdConfig& config,
                         const SliceFilter& filter) {
    if (grad.size() != store.size() || velocity_.size() != store.size())
        fail(ErrorKind::ShapeMismatch, "optimizer: gradient size does not match parameter store");
    double norm2 = 0;
    for (const auto& s : store.slices())
        if (filter(s.name))
            for (std::size_t i = s.offset; i < s.offset + s.size; ++i) norm2 += grad[i] * grad[i];
    const double norm = std::sqrt(norm2);
    if (!std::isfinite(norm)) fail(ErrorKind::Numerical, "optimizer: non-finite gradient norm");
    const double scale = (config.clip_norm > 0 && norm > config.clip_norm) ? config.clip_norm / norm : 1.0;
    auto& p = store.flat();
    for (const auto& s : store.slices()) {
        if (!filter(s.name)) continue;
        for (std::size_t i = s.offset; i < s.offset + s.size; ++i) {
            velocity_[i] = config.momentum * velocity_[i] + scale * grad[i];
            p[i] -= config.lr * velocity_[i];
        }
    }
    return norm;
}

Tensor normal_tensor(std::vector<int> shape, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace smartbrush
