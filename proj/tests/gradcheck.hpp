#pragma once

#include "smartbrush/autograd.hpp"
#include "smartbrush/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace smartbrush::testing {

struct GradCheckResult {
    double max_rel_error = 0;
    std::size_t checked = 0;
};

/// Compares d f / d x from backward() against central differences over every
/// element of x. Relative error uses max(|analytic|, |numeric|) as scale; tiny
/// gradients (< floor) are compared absolutely against floor * 1e-4.
inline GradCheckResult grad_check(const std::function<ad::Var(const ad::Var&)>& f, const Tensor& x0,
                                  double h = 1e-5, double floor = 1e-6) {
    ad::Var x = ad::leaf(x0);
    ad::Var y = f(x);
    ad::backward(y);
    const Tensor analytic = x.grad().empty() ? Tensor(x0.shape(), 0.0) : x.grad();

    GradCheckResult result;
    Tensor probe = x0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        probe[i] = x0[i] + h;
        const double up = f(ad::constant(probe)).value()[0];
        probe[i] = x0[i] - h;
        const double down = f(ad::constant(probe)).value()[0];
        probe[i] = x0[i];
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
        const double err = scale > floor ? std::abs(analytic[i] - numeric) / scale
                                         : std::abs(analytic[i] - numeric) / floor * 1e-4;
        result.max_rel_error = std::max(result.max_rel_error, err);
        ++result.checked;
    }
    return result;
}

/// Same comparison for one named parameter slice: `f` builds the scalar from
/// a Binding over `store`, which is perturbed in place and restored.
inline GradCheckResult param_grad_check(ParameterStore& store, const std::string& name,
                                        const std::function<ad::Var(const Binding&)>& f, double h = 1e-5,
                                        double floor = 1e-6) {
    const Binding bound(store, [&](const std::string& n) { return n == name; });
    ad::backward(f(bound));
    const std::vector<double> analytic = bound.gradient();
    const auto& slice = store.slice(name);
    GradCheckResult result;
    for (std::size_t i = slice.offset; i < slice.offset + slice.size; ++i) {
        const double keep = store.flat()[i];
        store.flat()[i] = keep + h;
        const double up = f(Binding(store, nullptr)).value()[0];
        store.flat()[i] = keep - h;
        const double down = f(Binding(store, nullptr)).value()[0];
        store.flat()[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
        const double err = scale > floor ? std::abs(analytic[i] - numeric) / scale
                                         : std::abs(analytic[i] - numeric) / floor * 1e-4;
        result.max_rel_error = std::max(result.max_rel_error, err);
        ++result.checked;
    }
    return result;
}

}  // namespace smartbrush::testing
