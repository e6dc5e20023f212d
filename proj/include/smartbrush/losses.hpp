#pragma once

#include "smartbrush/autograd.hpp"
#include "smartbrush/tensor.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace smartbrush {

using Complex = std::complex<double>;

/// Unitary 2-D DFT of an (h, w) real plane, row-major output.
std::vector<Complex> dft2(std::span<const double> plane, int height, int width);
/// Inverse of dft2 (also unitary); returns the complex result.
std::vector<Complex> idft2(std::span<const Complex> spectrum, int height, int width);

/// Fixed convolutional feature stack used by the perceptual and style losses
/// and by FID. Immutable after construction.
class FeatureExtractor {
public:
    struct Layer {
        Tensor weight;  // (Co, Ci, 3, 3)
        Tensor bias;    // (Co)
        int stride = 2;
        double loss_weight = 1.0;  // w_l
    };

    /// Random-weight stack (tanh activations, stride 2, widths 8/16/32 by
    /// default), deterministic in `seed`.
    static FeatureExtractor random(int in_channels, std::uint64_t seed, std::vector<int> widths = {8, 16, 32});
    /// One "layer" whose output is the input itself.
    static FeatureExtractor identity();
    static FeatureExtractor from_layers(std::vector<Layer> layers);

    bool is_identity() const { return layers_.empty(); }
    std::size_t layer_count() const { return is_identity() ? 1 : layers_.size(); }
    double layer_weight(std::size_t l) const { return is_identity() ? 1.0 : layers_[l].loss_weight; }
    const std::vector<Layer>& layers() const { return layers_; }

    /// Activation after every layer, in order.
    std::vector<ad::Var> features(const ad::Var& input) const;
    std::vector<Tensor> features(const Tensor& input) const;

    /// Global-average-pooled activations of every layer, concatenated.
    std::vector<double> pooled(const Tensor& input) const;

private:
    std::vector<Layer> layers_;
};

/// Spectrum weight exponent and loss-term weights.
struct LossWeights {
    double mse = 1.0;
    double perceptual = 0.1;
    double ffl = 0.1;
    double style = 0.05;

    void validate() const;
};

/// Mean over channels of (1/MN) sum w(u,v) |F_gt - F_gen|^2 with the dynamic
/// spectrum weight w = |F_gt - F_gen|^alpha normalized to max 1 per channel.
/// w is treated as a constant for differentiation.
ad::Var focal_frequency_loss(const ad::Var& gen, const Tensor& gt, double alpha = 1.0);
double focal_frequency_loss(const Tensor& gt, const Tensor& gen, double alpha = 1.0);

/// G_ij = sum_{h,w} f_i(h,w) f_j(h,w) for a (C,H,W) feature tensor.
ad::Var gram_matrix(const ad::Var& features);
Tensor gram_matrix(const Tensor& features);

/// sum_l w_l / (4 C_l^2 H_l^2 W_l^2) * ||G_gen^l - G_gt^l||_F^2
ad::Var style_loss(const ad::Var& gen, const Tensor& gt, const FeatureExtractor& extractor);
double style_loss(const Tensor& gen, const Tensor& gt, const FeatureExtractor& extractor);

/// sum_l mean((phi_l(gen) - phi_l(gt))^2)
ad::Var perceptual_loss(const ad::Var& gen, const Tensor& gt, const FeatureExtractor& extractor);
double perceptual_loss(const Tensor& gen, const Tensor& gt, const FeatureExtractor& extractor);

struct LossBreakdown {
    double total = 0;
    double mse = 0;
    double perceptual = 0;
    double ffl = 0;
    double style = 0;
};

struct TotalLoss {
    ad::Var value;
    LossBreakdown terms;
};

TotalLoss total_loss(const ad::Var& gen, const Tensor& gt, const LossWeights& weights, const FeatureExtractor& extractor,
                     double ffl_alpha = 1.0);
LossBreakdown total_loss(const Tensor& gen, const Tensor& gt, const LossWeights& weights,
                         const FeatureExtractor& extractor, double ffl_alpha = 1.0);

}  // namespace smartbrush
