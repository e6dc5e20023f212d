#include "smartbrush/brushgan.hpp"

#include "smartbrush/error.hpp"
#include "smartbrush/layers.hpp"

#include <cmath>

namespace smartbrush {

namespace {

constexpr int kInChannels = kTilesPerChunk + 1;

void add_gated(ParameterStore& p, const std::string& name, int ci, int co, std::mt19937_64& rng) {
    const double std = std::sqrt(1.0 / (9.0 * ci));
    p.add(name + ".wf", normal_tensor({co, ci, 3, 3}, std, rng));
    p.add(name + ".bf", Tensor({co}));
    p.add(name + ".wg", normal_tensor({co, ci, 3, 3}, std, rng));
    p.add(name + ".bg", Tensor({co}));
}

void add_conv(ParameterStore& p, const std::string& name, int ci, int co, std::mt19937_64& rng, double gain = 1.0) {
    p.add(name + ".w", normal_tensor({co, ci, 3, 3}, gain * std::sqrt(1.0 / (9.0 * ci)), rng));
    p.add(name + ".b", Tensor({co}));
}

ad::Var gated(const Binding& p, const std::string& name, const ad::Var& x, int stride) {
    return gated_conv(x, p[name + ".wf"], p[name + ".bf"], p[name + ".wg"], p[name + ".bg"], stride, 1, Activation::Elu);
}

ad::Var conv(const Binding& p, const std::string& name, const ad::Var& x, int stride) {
    return ad::conv2d(x, p[name + ".w"], p[name + ".b"], stride, 1);
}

Tensor repeat_mask(const Tensor& brush, int channels) {
    std::vector<Tensor> parts(static_cast<std::size_t>(channels), brush);
    return concat_channels(parts);
}

// Encoder/decoder shared by both stages; `fuse` edits the bottleneck.
template <typename Fuse>
ad::Var autoencoder(const Binding& p, const std::string& stage, const ad::Var& x, Fuse fuse) {
    const ad::Var e1 = gated(p, stage + ".e1", x, 1);
    const ad::Var e2 = gated(p, stage + ".e2", e1, 2);
    const ad::Var e3 = fuse(gated(p, stage + ".e3", e2, 2));
    const ad::Var d1 = gated(p, stage + ".d1", ad::upsample2x(e3), 1);
    const ad::Var d2 = gated(p, stage + ".d2", ad::concat_channels({ad::upsample2x(d1), e1}), 1);
    return ad::sigmoid(conv(p, stage + ".out", ad::concat_channels({d2, x}), 1));
}

}  // namespace

void GanConfig::validate() const {
    if (tile_size < 4 || tile_size % 4 != 0) fail(ErrorKind::InvalidArgument, "brushgan tile size must be a multiple of 4");
    if (context_channels < 1 || width < 1 || attn_dim < 1 || disc_width < 1 || disc_layers < 1)
        fail(ErrorKind::InvalidArgument, "brushgan config sizes must be positive");
}

nlohmann::json GanConfig::to_json() const {
    return {{"tile_size", tile_size}, {"context_channels", context_channels}, {"width", width},
            {"attn_dim", attn_dim},   {"disc_width", disc_width},             {"disc_layers", disc_layers}};
}

GanConfig GanConfig::from_json(const nlohmann::json& j) {
    GanConfig c;
    c.tile_size = j.at("tile_size").get<int>();
    c.context_channels = j.at("context_channels").get<int>();
    c.width = j.at("width").get<int>();
    c.attn_dim = j.at("attn_dim").get<int>();
    c.disc_width = j.at("disc_width").get<int>();
    c.disc_layers = j.at("disc_layers").get<int>();
    c.validate();
    return c;
}

ParameterStore BrushGan::initial_parameters(const GanConfig& c, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(seed);
    ParameterStore p;
    const int w = c.width;
    for (const std::string stage : {"coarse", "fine"}) {
        add_gated(p, stage + ".e1", kInChannels, w, rng);
        add_gated(p, stage + ".e2", w, w, rng);
        add_gated(p, stage + ".e3", w, w, rng);
        if (stage == "fine") {
            add_conv(p, "fine.ctx1", c.context_channels, w, rng);
            add_conv(p, "fine.ctx2", w, w, rng);
            p.add("fine.q", normal_tensor({w, c.attn_dim}, std::sqrt(1.0 / w), rng));
            p.add("fine.k", normal_tensor({w, c.attn_dim}, std::sqrt(1.0 / w), rng));
            p.add("fine.v", normal_tensor({w, w}, std::sqrt(1.0 / w), rng));
        }
        add_gated(p, stage + ".d1", w, w, rng);
        add_gated(p, stage + ".d2", 2 * w, w, rng);
        add_conv(p, stage + ".out", w + kInChannels, kTilesPerChunk, rng, 0.1);
    }
    int ci = kInChannels;
    for (int l = 0; l < c.disc_layers; ++l) {
        const int co = l + 1 == c.disc_layers ? 1 : c.disc_width << l;
        add_conv(p, "disc.l" + std::to_string(l), ci, co, rng);
        ci = co;
    }
    return p;
}

BrushGan::BrushGan(GanConfig config, std::uint64_t seed) : config_(config), params_(initial_parameters(config, seed)) {}

BrushGan::BrushGan(GanConfig config, ParameterStore params) : config_(config), params_(std::move(params)) {
    if (!params_.same_layout(initial_parameters(config_, 0)))
        fail(ErrorKind::Format, "brushgan parameters do not match the configured shape table");
}

BrushGan::Graph BrushGan::build(const Binding& p, const Tensor& tiles, const Tensor& brush, const Tensor& context,
                                bool with_fine) const {
    const int s = tiles.height();
    if (tiles.channels() != kTilesPerChunk || s % 4 != 0 || tiles.width() != s)
        fail(ErrorKind::ShapeMismatch, "brushgan: tiles must be (8, s, s) with s divisible by 4, got " + tiles.shape_string());
    if (brush.shape() != std::vector<int>{1, s, s}) fail(ErrorKind::ShapeMismatch, "brushgan: brush shape mismatch");
    if (context.rank() != 3 || context.channels() != config_.context_channels || context.height() != s || context.width() != s)
        fail(ErrorKind::ShapeMismatch, "brushgan: context " + context.shape_string() + " does not match config");

    const Tensor brush8 = repeat_mask(brush, kTilesPerChunk);
    const ad::Var input = ad::constant(tiles);
    const ad::Var brush_var = ad::constant(brush);

    Graph g;
    g.coarse_raw = autoencoder(p, "coarse", ad::concat_channels({input, brush_var}), [](const ad::Var& b) { return b; });
    g.coarse = ad::where(brush8, g.coarse_raw, input);
    if (!with_fine) return g;

    const ad::Var ctx = ad::constant(context);
    const auto fuse = [&](const ad::Var& bottleneck) {
        const ad::Var c1 = ad::elu(conv(p, "fine.ctx1", ctx, 2));
        const ad::Var c2 = ad::elu(conv(p, "fine.ctx2", c1, 2));
        const ad::Var ctx_tokens = to_tokens(c2);
        const ad::Var q = ad::matmul(to_tokens(bottleneck), p["fine.q"]);
        const ad::Var k = ad::matmul(ctx_tokens, p["fine.k"]);
        const ad::Var v = ad::matmul(ctx_tokens, p["fine.v"]);
        const ad::Var attended = cross_attention(q, k, v);
        return ad::add(bottleneck, from_tokens(attended, bottleneck.shape()[1], bottleneck.shape()[2]));
    };
    g.fine_raw = autoencoder(p, "fine", ad::concat_channels({g.coarse, brush_var}), fuse);
    g.fine = ad::where(brush8, g.fine_raw, input);
    return g;
}

BrushGan::Output BrushGan::forward(const MaskedChunkInput& input) const {
    input.validate();
    const Binding p(params_, nullptr);
    const Graph g = build(p, input.tiles, input.brush.pixels, input.context.stacked(), true);
    // Re-composite on tensors so unmasked pixels are copied, never recomputed.
    return {g.coarse_raw.value(), composite(input, g.fine_raw.value())};
}

Tensor BrushGan::generate(const MaskedChunkInput& input, std::uint64_t) const { return forward(input).fine; }

ad::Var BrushGan::discriminate(const Binding& p, const ad::Var& tiles, const Tensor& brush) const {
    ad::Var x = ad::concat_channels({tiles, ad::constant(brush)});
    for (int l = 0; l < config_.disc_layers; ++l) {
        x = conv(p, "disc.l" + std::to_string(l), x, 2);
        if (l + 1 < config_.disc_layers) x = ad::leaky_relu(x);
    }
    return x;
}

Tensor BrushGan::patch_scores(const Tensor& tiles, const BrushMask& brush) const {
    if (tiles.rank() != 3 || tiles.channels() != kTilesPerChunk || brush.pixels.height() != tiles.height() ||
        brush.pixels.width() != tiles.width())
        fail(ErrorKind::ShapeMismatch, "patch discriminator: tiles " + tiles.shape_string() + " vs brush " +
                                           brush.pixels.shape_string());
    const Binding p(params_, nullptr);
    return discriminate(p, ad::constant(tiles), brush.pixels).value();
}

BrushGan::Output brushgan_forward(const BrushGan& model, const MaskedChunkInput& input) { return model.forward(input); }

Tensor patch_discriminator(const BrushGan& model, const Tensor& tiles, const BrushMask& brush) {
    return model.patch_scores(tiles, brush);
}

namespace {

Tensor masked(const Tensor& tiles, const BrushMask& brush) {
    return MaskedChunkInput::from_tiles(tiles, brush, ContextStack{}).tiles;
}

}  // namespace

GanHistory train_brushgan(BrushGan& model, const std::vector<TrainingSample>& data, const GanSchedule& schedule) {
    if (data.empty()) fail(ErrorKind::InvalidArgument, "train_brushgan: empty dataset");
    schedule.weights.validate();
    const int s = data.front().tiles.height();
    ParameterStore& store = model.params();
    MomentumSgd opt(store.size());
    std::mt19937_64 rng(schedule.seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    const auto coarse_only = prefix_filter("coarse.");
    const auto fine_only = prefix_filter("fine.");
    const auto disc_only = prefix_filter("disc.");
    const FeatureExtractor extractor = FeatureExtractor::random(kTilesPerChunk, schedule.seed + 7);

    GanHistory history;
    for (int step = 0; step < schedule.coarse_steps; ++step) {
        const TrainingSample& sample = data[pick(rng)];
        const MaskMode mode = schedule.curriculum.sample(static_cast<double>(step) / schedule.coarse_steps, rng);
        const BrushMask brush = generate_random_mask(mode, rng(), s);
        const Binding p(store, coarse_only);
        const auto g = model.build(p, masked(sample.tiles, brush), brush.pixels, sample.context, false);
        const ad::Var loss = ad::mse(g.coarse_raw, ad::constant(sample.tiles));
        check_finite(loss.value()[0], "coarse MSE", step);
        ad::backward(loss);
        opt.step(store, p.gradient(), schedule.coarse_opt, coarse_only);
        history.coarse_loss.push_back(loss.value()[0]);
    }

    for (int step = 0; step < schedule.fine_steps; ++step) {
        const TrainingSample& sample = data[pick(rng)];
        const MaskMode mode = schedule.curriculum.sample(static_cast<double>(step) / schedule.fine_steps, rng);
        const BrushMask brush = generate_random_mask(mode, rng(), s);
        const Tensor input = masked(sample.tiles, brush);

        const Binding p(store, fine_only);
        const auto g = model.build(p, input, brush.pixels, sample.context, true);
        const TotalLoss recon = total_loss(g.fine_raw, sample.tiles, schedule.weights, extractor);
        const ad::Var adv = ad::scale(ad::mean(model.discriminate(p, g.fine, brush.pixels)), -1.0);
        const ad::Var loss = ad::add(recon.value, ad::scale(adv, schedule.adversarial_weight));
        check_finite(loss.value()[0], "fine loss", step);
        ad::backward(loss);
        opt.step(store, p.gradient(), schedule.fine_opt, fine_only);
        history.fine_loss.push_back(loss.value()[0]);

        const Binding d(store, disc_only);
        const ad::Var real = model.discriminate(d, ad::constant(sample.tiles), brush.pixels);
        const ad::Var fake = model.discriminate(d, ad::constant(g.fine.value()), brush.pixels);
        const ad::Var d_loss = ad::add(ad::mean(ad::relu(ad::add_scalar(ad::scale(real, -1.0), 1.0))),
                                       ad::mean(ad::relu(ad::add_scalar(fake, 1.0))));
        check_finite(d_loss.value()[0], "discriminator hinge loss", step);
        ad::backward(d_loss);
        opt.step(store, d.gradient(), schedule.disc_opt, disc_only);
        history.disc_loss.push_back(d_loss.value()[0]);
    }
    return history;
}

double coarse_mse(const BrushGan& model, const std::vector<TrainingSample>& data, const std::vector<BrushMask>& masks) {
    if (data.size() != masks.size()) fail(ErrorKind::InvalidArgument, "coarse_mse: one mask per sample required");
    const Binding p(model.params(), nullptr);
    double acc = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto g = model.build(p, masked(data[i].tiles, masks[i]), masks[i].pixels, data[i].context, false);
        acc += mse(g.coarse_raw.value(), data[i].tiles);
    }
    return acc / static_cast<double>(data.size());
}

}  // namespace smartbrush
