#include "smartbrush/diffusion.hpp"

#include "smartbrush/error.hpp"

#include <cmath>
#include <random>

namespace smartbrush {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) fail(ErrorKind::InvalidArgument, "noise schedule needs at least one step");
    double prod = 1.0;
    for (std::size_t i = 0; i < betas_.size(); ++i) {
        const double b = betas_[i];
        if (!(b > 0.0 && b < 1.0)) fail(ErrorKind::InvalidArgument, "noise schedule betas must lie in (0,1)");
        if (i > 0 && b < betas_[i - 1]) fail(ErrorKind::InvalidArgument, "noise schedule betas must be non-decreasing");
        prod *= 1.0 - b;
        alpha_bars_.push_back(prod);
    }
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
    if (steps < 1) fail(ErrorKind::InvalidArgument, "noise schedule needs at least one step");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        betas[static_cast<std::size_t>(i)] = steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * i / (steps - 1);
    return NoiseSchedule(std::move(betas));
}

void NoiseSchedule::check_step(int t) const {
    if (t < 1 || t > steps())
        fail(ErrorKind::InvalidArgument, "diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
}

double NoiseSchedule::beta(int t) const {
    check_step(t);
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    check_step(t);
    return alpha_bars_[static_cast<std::size_t>(t - 1)];
}

Tensor gaussian_noise(const std::vector<int>& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Tensor t(shape);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

ForwardSample diffusion_forward(const Tensor& x0, int t, const NoiseSchedule& schedule, std::uint64_t seed) {
    schedule.check_step(t);
    const double ab = schedule.alpha_bar(t);
    ForwardSample out{x0, gaussian_noise(x0.shape(), seed)};
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    for (std::size_t i = 0; i < x0.size(); ++i) out.x_t[i] = a * x0[i] + b * out.noise[i];
    return out;
}

Tensor diffusion_reverse_step(const Tensor& x_t, int t, const Tensor& predicted_noise, const NoiseSchedule& schedule,
                              std::uint64_t seed) {
    if (!x_t.same_shape(predicted_noise))
        fail(ErrorKind::ShapeMismatch, "reverse step: noise " + predicted_noise.shape_string() + " vs x_t " + x_t.shape_string());
    const double beta = schedule.beta(t);
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - 1);
    const double coef = beta / std::sqrt(1.0 - ab);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
    Tensor out = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - coef * predicted_noise[i]) * inv_sqrt_alpha;
    if (t > 1) {
        const double sigma = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab));
        const Tensor z = gaussian_noise(x_t.shape(), seed);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * z[i];
    }
    return out;
}

Tensor oracle_noise(const Tensor& x_t, const Tensor& x0, int t, const NoiseSchedule& schedule) {
    const double ab = schedule.alpha_bar(t);
    Tensor out = x_t;
    const double a = std::sqrt(ab), inv = 1.0 / std::sqrt(1.0 - ab);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - a * x0[i]) * inv;
    return out;
}

}  // namespace smartbrush
