#pragma once

#include "smartbrush/diffusion.hpp"
#include "smartbrush/generator.hpp"
#include "smartbrush/losses.hpp"
#include "smartbrush/params.hpp"
#include "smartbrush/training.hpp"

#include <json.hpp>

namespace smartbrush {

struct CldmConfig {
    int tile_size = 32;
    int context_channels = kContextChannels;
    int latent_channels = 4;
    int width = 16;
    int time_dim = 8;
    int steps = 50;
    double beta_start = 1e-3;
    double beta_end = 0.2;

    void validate() const;
    NoiseSchedule schedule() const { return NoiseSchedule::linear(steps, beta_start, beta_end); }
    nlohmann::json to_json() const;
    static CldmConfig from_json(const nlohmann::json& j);
};

/// Toy latent diffusion inpainter: an autoencoder to a half-resolution
/// latent ("ae.*"), and a noise predictor ("den.*") conditioned on the
/// latent of the masked tiles, the downsampled brush, the step, and a hint
/// branch over the context planes that enters through a zero-initialized
/// 1x1 projection ("den.zero.*").
class BrushCldm final : public Generator {
public:
    explicit BrushCldm(CldmConfig config = {}, std::uint64_t seed = 1);
    BrushCldm(CldmConfig config, ParameterStore params);

    static ParameterStore initial_parameters(const CldmConfig& config, std::uint64_t seed);

    GeneratorKind kind() const override { return GeneratorKind::ToyBrushCLDM; }
    Tensor generate(const MaskedChunkInput& input, std::uint64_t seed) const override;

    ad::Var encode(const Binding& p, const ad::Var& tiles) const;
    ad::Var decode(const Binding& p, const ad::Var& latent) const;
    /// Predicted noise for latent z_t at step t.
    ad::Var denoise(const Binding& p, const ad::Var& z_t, int t, const Tensor& cond_latent, const Tensor& brush_latent,
                    const Tensor& context) const;

    /// Latent of the masked tiles with brushed latent cells zeroed, and the
    /// brush at latent resolution (a cell is set if any pixel under it is).
    std::pair<Tensor, Tensor> condition(const Binding& p, const Tensor& masked_tiles, const Tensor& brush) const;

    const CldmConfig& config() const { return config_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

private:
    CldmConfig config_;
    ParameterStore params_;
};

/// Free-function form of BrushCldm::generate().
Tensor brushcldm_generate(const BrushCldm& model, const MaskedChunkInput& input, std::uint64_t seed);

/// Sinusoidal step embedding of length `dim`.
Tensor timestep_embedding(int t, int dim);

struct CldmSchedule {
    int autoencoder_steps = 100;
    int denoiser_steps = 200;
    int finetune_steps = 20;
    SgdConfig autoencoder_opt{0.2, 0.9, 1.0};
    SgdConfig denoiser_opt{0.1, 0.9, 1.0};
    SgdConfig finetune_opt{0.05, 0.9, 1.0};
    LossWeights weights;
    std::uint64_t seed = 1;
    Curriculum curriculum;
};

struct CldmHistory {
    std::vector<double> autoencoder_loss;  // MSE + FFL
    std::vector<double> denoiser_loss;     // noise MSE
    std::vector<double> finetune_loss;     // full weighted loss on the decoder
};

/// Stage 1 trains the autoencoder on MSE + focal frequency loss, stage 2 the
/// noise predictor on noise MSE with the autoencoder fixed, stage 3 fine-tunes
/// the decoder on the full weighted loss.
CldmHistory train_brushcldm(BrushCldm& model, const std::vector<TrainingSample>& data, const CldmSchedule& schedule);

}  // namespace smartbrush
