#pragma once

#include "smartbrush/tensor.hpp"

#include <vector>

namespace smartbrush {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Windowed SSIM (11x11 Gaussian, sigma 1.5, K1 = 0.01, K2 = 0.03, range 1),
/// averaged over all fully-contained windows and all channels.
double ssim(const Tensor& a, const Tensor& b);

/// Normalized 11x11 Gaussian window used by ssim().
std::vector<double> ssim_window();

using FeatureSet = std::vector<std::vector<double>>;

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}) between Gaussian fits of
/// two sample sets (unbiased covariance).
double frechet_distance(const FeatureSet& a, const FeatureSet& b);

}  // namespace smartbrush
