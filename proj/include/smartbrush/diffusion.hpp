#pragma once

#include "smartbrush/tensor.hpp"

#include <cstdint>
#include <vector>

namespace smartbrush {

/// Variance schedule beta_1..beta_T; steps are 1-based.
class NoiseSchedule {
public:
    explicit NoiseSchedule(std::vector<double> betas);
    /// Betas spaced linearly from `beta_start` to `beta_end`.
    static NoiseSchedule linear(int steps, double beta_start = 1e-3, double beta_end = 0.2);

    int steps() const { return static_cast<int>(betas_.size()); }
    double beta(int t) const;
    /// Product of (1 - beta_s) for s <= t; alpha_bar(0) = 1.
    double alpha_bar(int t) const;
    const std::vector<double>& betas() const { return betas_; }
    /// Throws unless 1 <= t <= steps().
    void check_step(int t) const;

private:
    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

/// Standard normal tensor, deterministic in `seed`.
Tensor gaussian_noise(const std::vector<int>& shape, std::uint64_t seed);

struct ForwardSample {
    Tensor x_t;
    Tensor noise;
};

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps with eps drawn from `seed`.
ForwardSample diffusion_forward(const Tensor& x0, int t, const NoiseSchedule& schedule, std::uint64_t seed);

/// Ancestral step x_t -> x_{t-1}; no noise is injected at t = 1.
Tensor diffusion_reverse_step(const Tensor& x_t, int t, const Tensor& predicted_noise, const NoiseSchedule& schedule,
                              std::uint64_t seed);

/// The noise that maps x0 to x_t at step t: (x_t - sqrt(abar_t) x0) / sqrt(1 - abar_t).
Tensor oracle_noise(const Tensor& x_t, const Tensor& x0, int t, const NoiseSchedule& schedule);

}  // namespace smartbrush
