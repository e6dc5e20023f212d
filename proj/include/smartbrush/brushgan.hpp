#pragma once

#include "smartbrush/generator.hpp"
#include "smartbrush/losses.hpp"
#include "smartbrush/params.hpp"
#include "smartbrush/training.hpp"

#include <json.hpp>

namespace smartbrush {

struct GanConfig {
    int tile_size = 32;
    int context_channels = kContextChannels;
    int width = 16;
    int attn_dim = 8;
    int disc_width = 16;
    int disc_layers = 3;

    void validate() const;
    nlohmann::json to_json() const;
    static GanConfig from_json(const nlohmann::json& j);
};

/// Two-stage gated-convolution inpainter. The coarse autoencoder sees the
/// masked tiles and the brush; the fine autoencoder sees the coarse result
/// composited into the input and fuses the context planes at its bottleneck
/// through cross-attention. Parameters: "coarse.*", "fine.*", "disc.*".
class BrushGan final : public Generator {
public:
    explicit BrushGan(GanConfig config = {}, std::uint64_t seed = 1);
    BrushGan(GanConfig config, ParameterStore params);

    static ParameterStore initial_parameters(const GanConfig& config, std::uint64_t seed);

    GeneratorKind kind() const override { return GeneratorKind::ToyBrushGAN; }
    Tensor generate(const MaskedChunkInput& input, std::uint64_t seed) const override;

    struct Output {
        Tensor coarse;  // raw coarse autoencoder output
        Tensor fine;    // fine output composited with the input
    };
    Output forward(const MaskedChunkInput& input) const;

    struct Graph {
        ad::Var coarse_raw;
        ad::Var coarse;  // composited into the input
        ad::Var fine_raw;
        ad::Var fine;
    };
    /// `tiles` are the masked tiles, `brush` (1, s, s), `context` stacked planes.
    Graph build(const Binding& p, const Tensor& tiles, const Tensor& brush, const Tensor& context, bool with_fine) const;

    /// PatchGAN scores (1, s / 2^L, s / 2^L) for tiles + brush.
    ad::Var discriminate(const Binding& p, const ad::Var& tiles, const Tensor& brush) const;
    Tensor patch_scores(const Tensor& tiles, const BrushMask& brush) const;

    const GanConfig& config() const { return config_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

private:
    GanConfig config_;
    ParameterStore params_;
};

/// Free-function forms of forward() and patch_scores().
BrushGan::Output brushgan_forward(const BrushGan& model, const MaskedChunkInput& input);
Tensor patch_discriminator(const BrushGan& model, const Tensor& tiles, const BrushMask& brush);

struct GanSchedule {
    int coarse_steps = 100;
    int fine_steps = 100;
    SgdConfig coarse_opt{0.2, 0.9, 1.0};
    SgdConfig fine_opt{0.1, 0.9, 1.0};
    SgdConfig disc_opt{0.01, 0.9, 1.0};
    LossWeights weights;
    double adversarial_weight = 0.01;
    std::uint64_t seed = 1;
    Curriculum curriculum;
};

struct GanHistory {
    std::vector<double> coarse_loss;  // per phase-1 step (MSE)
    std::vector<double> fine_loss;    // per phase-2 step (total + adversarial)
    std::vector<double> disc_loss;    // per phase-2 step (hinge)
};

/// Phase 1 trains "coarse.*" on MSE. Phase 2 freezes it and trains "fine.*"
/// on the weighted loss plus a hinge adversarial term, alternating with
/// "disc.*" updates.
GanHistory train_brushgan(BrushGan& model, const std::vector<TrainingSample>& data, const GanSchedule& schedule);

/// Mean MSE of the raw coarse output over the samples, with masks[i] applied to sample i.
double coarse_mse(const BrushGan& model, const std::vector<TrainingSample>& data, const std::vector<BrushMask>& masks);

}  // namespace smartbrush
