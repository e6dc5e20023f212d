#include "smartbrush/brushcldm.hpp"

#include "smartbrush/error.hpp"
#include "smartbrush/layers.hpp"

#include <cmath>

namespace smartbrush {

namespace {

void add_conv(ParameterStore& p, const std::string& name, int ci, int co, int k, std::mt19937_64& rng, double gain = 1.0) {
    p.add(name + ".w", normal_tensor({co, ci, k, k}, gain * std::sqrt(1.0 / (k * k * ci)), rng));
    p.add(name + ".b", Tensor({co}));
}

ad::Var conv(const Binding& p, const std::string& name, const ad::Var& x, int stride) {
    const int k = p[name + ".w"].shape()[2];
    return ad::conv2d(x, p[name + ".w"], p[name + ".b"], stride, k / 2);
}

Tensor latent_brush(const Tensor& brush) {
    const int h = brush.height() / 2, w = brush.width() / 2;
    Tensor out = Tensor::image(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(0, y, x) = std::max({brush.at(0, 2 * y, 2 * x), brush.at(0, 2 * y + 1, 2 * x), brush.at(0, 2 * y, 2 * x + 1),
                                        brush.at(0, 2 * y + 1, 2 * x + 1)});
    return out;
}

std::uint64_t step_seed(std::uint64_t seed, int t) { return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(t); }

}  // namespace

void CldmConfig::validate() const {
    if (tile_size < 2 || tile_size % 2 != 0) fail(ErrorKind::InvalidArgument, "brushcldm tile size must be even");
    if (context_channels < 1 || latent_channels < 1 || width < 1 || time_dim < 2 || time_dim % 2 != 0 || steps < 1)
        fail(ErrorKind::InvalidArgument, "brushcldm config sizes must be positive (time_dim even)");
}

nlohmann::json CldmConfig::to_json() const {
    return {{"tile_size", tile_size}, {"context_channels", context_channels}, {"latent_channels", latent_channels},
            {"width", width},         {"time_dim", time_dim},                 {"steps", steps},
            {"beta_start", beta_start}, {"beta_end", beta_end}};
}

CldmConfig CldmConfig::from_json(const nlohmann::json& j) {
    CldmConfig c;
    c.tile_size = j.at("tile_size").get<int>();
    c.context_channels = j.at("context_channels").get<int>();
    c.latent_channels = j.at("latent_channels").get<int>();
    c.width = j.at("width").get<int>();
    c.time_dim = j.at("time_dim").get<int>();
    c.steps = j.at("steps").get<int>();
    c.beta_start = j.at("beta_start").get<double>();
    c.beta_end = j.at("beta_end").get<double>();
    c.validate();
    return c;
}

ParameterStore BrushCldm::initial_parameters(const CldmConfig& c, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(seed);
    ParameterStore p;
    const int w = c.width, z = c.latent_channels;
    add_conv(p, "ae.enc1", kTilesPerChunk, w, 3, rng);
    add_conv(p, "ae.enc2", w, w, 3, rng);
    add_conv(p, "ae.enc3", w, z, 3, rng);
    add_conv(p, "ae.dec1", z, w, 3, rng);
    add_conv(p, "ae.dec2", w, w, 3, rng);
    add_conv(p, "ae.dec3", w, kTilesPerChunk, 3, rng, 0.1);
    add_conv(p, "den.in", 2 * z + 1, w, 3, rng);
    p.add("den.time.w", normal_tensor({c.time_dim, w}, std::sqrt(1.0 / c.time_dim), rng));
    p.add("den.time.b", Tensor({1, w}));
    add_conv(p, "den.hint", c.context_channels, w, 3, rng);
    p.add("den.zero.w", Tensor({w, w, 1, 1}));
    p.add("den.zero.b", Tensor({w}));
    add_conv(p, "den.mid", w, w, 3, rng);
    add_conv(p, "den.out", w, z, 3, rng, 0.5);
    return p;
}

BrushCldm::BrushCldm(CldmConfig config, std::uint64_t seed) : config_(config), params_(initial_parameters(config, seed)) {}

BrushCldm::BrushCldm(CldmConfig config, ParameterStore params) : config_(config), params_(std::move(params)) {
    if (!params_.same_layout(initial_parameters(config_, 0)))
        fail(ErrorKind::Format, "brushcldm parameters do not match the configured shape table");
}

ad::Var BrushCldm::encode(const Binding& p, const ad::Var& tiles) const {
    const ad::Var h1 = ad::elu(conv(p, "ae.enc1", tiles, 1));
    const ad::Var h2 = ad::elu(conv(p, "ae.enc2", h1, 2));
    return conv(p, "ae.enc3", h2, 1);
}

ad::Var BrushCldm::decode(const Binding& p, const ad::Var& latent) const {
    const ad::Var h1 = ad::elu(conv(p, "ae.dec1", ad::upsample2x(latent), 1));
    const ad::Var h2 = ad::elu(conv(p, "ae.dec2", h1, 1));
    return ad::sigmoid(conv(p, "ae.dec3", h2, 1));
}

Tensor timestep_embedding(int t, int dim) {
    Tensor e({1, dim});
    for (int i = 0; i < dim / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / dim);
        e.at(0, 2 * i) = std::sin(t * freq);
        e.at(0, 2 * i + 1) = std::cos(t * freq);
    }
    return e;
}

ad::Var BrushCldm::denoise(const Binding& p, const ad::Var& z_t, int t, const Tensor& cond_latent, const Tensor& brush_latent,
                           const Tensor& context) const {
    const int h = z_t.shape()[1], w = z_t.shape()[2];
    if (!cond_latent.same_shape(z_t.value()) || brush_latent.shape() != std::vector<int>{1, h, w})
        fail(ErrorKind::ShapeMismatch, "denoiser: conditioning planes do not match the latent " + z_t.value().shape_string());
    if (context.rank() != 3 || context.channels() != config_.context_channels || context.height() != 2 * h ||
        context.width() != 2 * w)
        fail(ErrorKind::ShapeMismatch, "denoiser: context " + context.shape_string() + " does not match the latent");

    const ad::Var x = ad::concat_channels({z_t, ad::constant(cond_latent), ad::constant(brush_latent)});
    const ad::Var temb = ad::add(ad::matmul(ad::constant(timestep_embedding(t, config_.time_dim)), p["den.time.w"]), p["den.time.b"]);
    ad::Var hdn = ad::elu(ad::add_channel_bias(conv(p, "den.in", x, 1), ad::reshape(temb, {config_.width})));
    // Hint branch: stride 2 brings the context planes to latent resolution.
    const ad::Var hint = ad::elu(conv(p, "den.hint", ad::constant(context), 2));
    hdn = ad::add(hdn, conv(p, "den.zero", hint, 1));
    const ad::Var mid = ad::elu(conv(p, "den.mid", hdn, 1));
    return conv(p, "den.out", mid, 1);
}

std::pair<Tensor, Tensor> BrushCldm::condition(const Binding& p, const Tensor& masked_tiles, const Tensor& brush) const {
    Tensor cond = encode(p, ad::constant(masked_tiles)).value();
    const Tensor bl = latent_brush(brush);
    for (int c = 0; c < cond.channels(); ++c)
        for (int y = 0; y < cond.height(); ++y)
            for (int x = 0; x < cond.width(); ++x)
                if (bl.at(0, y, x) != 0.0) cond.at(c, y, x) = 0.0;
    return {cond, bl};
}

Tensor BrushCldm::generate(const MaskedChunkInput& input, std::uint64_t seed) const {
    input.validate();
    if (input.side() % 2 != 0) fail(ErrorKind::ShapeMismatch, "brushcldm: tile side must be even");
    const Binding p(params_, nullptr);
    const auto [cond, brush_latent] = condition(p, input.tiles, input.brush.pixels);
    const Tensor context = input.context.stacked();
    const NoiseSchedule schedule = config_.schedule();
    Tensor z = gaussian_noise(cond.shape(), seed);
    for (int t = schedule.steps(); t >= 1; --t) {
        const Tensor eps = denoise(p, ad::constant(z), t, cond, brush_latent, context).value();
        z = diffusion_reverse_step(z, t, eps, schedule, step_seed(seed, t));
    }
    return composite(input, decode(p, ad::constant(z)).value());
}

Tensor brushcldm_generate(const BrushCldm& model, const MaskedChunkInput& input, std::uint64_t seed) {
    return model.generate(input, seed);
}

CldmHistory train_brushcldm(BrushCldm& model, const std::vector<TrainingSample>& data, const CldmSchedule& schedule) {
    if (data.empty()) fail(ErrorKind::InvalidArgument, "train_brushcldm: empty dataset");
    schedule.weights.validate();
    const int s = data.front().tiles.height();
    ParameterStore& store = model.params();
    MomentumSgd opt(store.size());
    std::mt19937_64 rng(schedule.seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    const NoiseSchedule noise = model.config().schedule();
    std::uniform_int_distribution<int> pick_t(1, noise.steps());
    const auto ae = prefix_filter("ae.");
    const auto den = prefix_filter("den.");
    const auto dec = prefix_filter("ae.dec");
    const FeatureExtractor extractor = FeatureExtractor::random(kTilesPerChunk, schedule.seed + 7);

    CldmHistory history;
    LossWeights ae_weights{schedule.weights.mse, 0.0, schedule.weights.ffl, 0.0};
    if (ae_weights.mse == 0 && ae_weights.ffl == 0) ae_weights.mse = 1.0;
    for (int step = 0; step < schedule.autoencoder_steps; ++step) {
        const TrainingSample& sample = data[pick(rng)];
        const Binding p(store, ae);
        const ad::Var recon = model.decode(p, model.encode(p, ad::constant(sample.tiles)));
        const TotalLoss loss = total_loss(recon, sample.tiles, ae_weights, extractor);
        check_finite(loss.terms.total, "autoencoder loss", step);
        ad::backward(loss.value);
        opt.step(store, p.gradient(), schedule.autoencoder_opt, ae);
        history.autoencoder_loss.push_back(loss.terms.total);
    }

    for (int step = 0; step < schedule.denoiser_steps; ++step) {
        const TrainingSample& sample = data[pick(rng)];
        const MaskMode mode = schedule.curriculum.sample(static_cast<double>(step) / schedule.denoiser_steps, rng);
        const BrushMask brush = generate_random_mask(mode, rng(), s);
        const Binding p(store, den);
        const Tensor z0 = model.encode(p, ad::constant(sample.tiles)).value();
        const auto [cond, brush_latent] =
            model.condition(p, MaskedChunkInput::from_tiles(sample.tiles, brush, ContextStack{}).tiles, brush.pixels);
        const int t = pick_t(rng);
        const ForwardSample fwd = diffusion_forward(z0, t, noise, rng());
        const ad::Var eps = model.denoise(p, ad::constant(fwd.x_t), t, cond, brush_latent, sample.context);
        const ad::Var loss = ad::mse(eps, ad::constant(fwd.noise));
        check_finite(loss.value()[0], "denoiser loss", step);
        ad::backward(loss);
        opt.step(store, p.gradient(), schedule.denoiser_opt, den);
        history.denoiser_loss.push_back(loss.value()[0]);
    }

    for (int step = 0; step < schedule.finetune_steps; ++step) {
        const TrainingSample& sample = data[pick(rng)];
        const Binding p(store, dec);
        const ad::Var recon = model.decode(p, model.encode(p, ad::constant(sample.tiles)));
        const TotalLoss loss = total_loss(recon, sample.tiles, schedule.weights, extractor);
        check_finite(loss.terms.total, "decoder fine-tune loss", step);
        ad::backward(loss.value);
        opt.step(store, p.gradient(), schedule.finetune_opt, dec);
        history.finetune_loss.push_back(loss.terms.total);
    }
    return history;
}

}  // namespace smartbrush
