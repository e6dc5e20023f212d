#include "smartbrush/losses.hpp"

#include "smartbrush/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace smartbrush {

namespace {

std::vector<Complex> twiddles(int n, double sign) {
    std::vector<Complex> t(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
            const double angle = sign * 2.0 * std::numbers::pi * ((static_cast<long long>(k) * j) % n) / n;
            t[static_cast<std::size_t>(k) * n + j] = {std::cos(angle), std::sin(angle)};
        }
    return t;
}

// Separable transform: rows, then columns, then the unitary 1/sqrt(hw) scale.
std::vector<Complex> transform(std::span<const Complex> in, int h, int w, double sign) {
    const auto tw = twiddles(w, sign);
    const auto th = twiddles(h, sign);
    std::vector<Complex> rows(in.size());
    for (int y = 0; y < h; ++y)
        for (int v = 0; v < w; ++v) {
            Complex acc = 0;
            for (int x = 0; x < w; ++x) acc += in[static_cast<std::size_t>(y) * w + x] * tw[static_cast<std::size_t>(v) * w + x];
            rows[static_cast<std::size_t>(y) * w + v] = acc;
        }
    std::vector<Complex> out(in.size());
    const double norm = 1.0 / std::sqrt(static_cast<double>(h) * w);
    for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) {
            Complex acc = 0;
            for (int y = 0; y < h; ++y) acc += rows[static_cast<std::size_t>(y) * w + v] * th[static_cast<std::size_t>(u) * h + y];
            out[static_cast<std::size_t>(u) * w + v] = acc * norm;
        }
    return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        fail(ErrorKind::ShapeMismatch, std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

}  // namespace

std::vector<Complex> dft2(std::span<const double> plane, int height, int width) {
    std::vector<Complex> in(plane.begin(), plane.end());
    return transform(in, height, width, -1.0);
}

std::vector<Complex> idft2(std::span<const Complex> spectrum, int height, int width) {
    return transform(spectrum, height, width, +1.0);
}

FeatureExtractor FeatureExtractor::random(int in_channels, std::uint64_t seed, std::vector<int> widths) {
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    int ci = in_channels;
    for (int co : widths) {
        Layer layer;
        layer.weight = Tensor({co, ci, 3, 3});
        layer.bias = Tensor({co});
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(9.0 * ci));
        for (double& v : layer.weight.data()) v = dist(rng);
        for (double& v : layer.bias.data()) v = 0.1 * dist(rng);
        layer.stride = 2;
        layers.push_back(std::move(layer));
        ci = co;
    }
    return from_layers(std::move(layers));
}

FeatureExtractor FeatureExtractor::identity() { return FeatureExtractor{}; }

FeatureExtractor FeatureExtractor::from_layers(std::vector<Layer> layers) {
    FeatureExtractor fx;
    fx.layers_ = std::move(layers);
    return fx;
}

std::vector<ad::Var> FeatureExtractor::features(const ad::Var& input) const {
    if (is_identity()) return {input};
    std::vector<ad::Var> out;
    ad::Var x = input;
    for (const auto& layer : layers_) {
        x = ad::tanh(ad::conv2d(x, ad::constant(layer.weight), ad::constant(layer.bias), layer.stride, 1));
        out.push_back(x);
    }
    return out;
}

std::vector<Tensor> FeatureExtractor::features(const Tensor& input) const {
    if (is_identity()) return {input};
    std::vector<Tensor> out;
    Tensor x = input;
    for (const auto& layer : layers_) {
        x = ad::conv2d(x, layer.weight, layer.bias, layer.stride, 1);
        for (double& v : x.data()) v = std::tanh(v);
        out.push_back(x);
    }
    return out;
}

std::vector<double> FeatureExtractor::pooled(const Tensor& input) const {
    std::vector<double> out;
    for (const auto& f : features(input)) {
        for (int c = 0; c < f.channels(); ++c) {
            double s = 0;
            for (double v : f.channel(c)) s += v;
            out.push_back(s / (static_cast<double>(f.height()) * f.width()));
        }
    }
    return out;
}

void LossWeights::validate() const {
    if (mse < 0 || perceptual < 0 || ffl < 0 || style < 0) fail(ErrorKind::InvalidArgument, "loss weights must be >= 0");
    if (mse == 0 && perceptual == 0 && ffl == 0 && style == 0) {
        fail(ErrorKind::InvalidArgument, "at least one loss weight must be positive");
    }
}

ad::Var focal_frequency_loss(const ad::Var& gen, const Tensor& gt, double alpha) {
    require_same_shape(gen.value(), gt, "focal_frequency_loss");
    if (alpha < 0) fail(ErrorKind::InvalidArgument, "focal_frequency_loss: alpha must be >= 0");
    const Tensor& g = gen.value();
    const int channels = g.channels(), h = g.height(), w = g.width();
    const double mn = static_cast<double>(h) * w;

    // Per channel: weighted spectrum of the difference, kept for backward.
    auto weighted = std::make_shared<std::vector<std::vector<Complex>>>();
    double loss = 0;
    for (int c = 0; c < channels; ++c) {
        std::vector<double> diff(static_cast<std::size_t>(h) * w);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = gt.channel(c)[i] - g.channel(c)[i];
        auto spec = dft2(diff, h, w);  // F_gt - F_gen by linearity
        std::vector<double> weight(spec.size());
        double wmax = 0;
        for (std::size_t i = 0; i < spec.size(); ++i) {
            weight[i] = std::pow(std::abs(spec[i]), alpha);
            wmax = std::max(wmax, weight[i]);
        }
        double acc = 0;
        for (std::size_t i = 0; i < spec.size(); ++i) {
            const double wi = wmax > 0 ? weight[i] / wmax : 0.0;
            acc += wi * std::norm(spec[i]);
            spec[i] *= wi;
        }
        loss += acc / mn;
        weighted->push_back(std::move(spec));
    }
    loss /= channels;

    return ad::make_op(Tensor({1}, loss), {gen}, [weighted, channels, h, w, mn](ad::Node& self) {
        // d/dgen sum w|F(gt-gen)|^2 = -2 Re(F^H (w . D)).
        Tensor& grad = self.parents[0]->grad_buffer();
        const double k = -2.0 * self.grad[0] / (mn * channels);
        for (int c = 0; c < channels; ++c) {
            const auto back = idft2((*weighted)[c], h, w);
            double* gc = grad.ptr() + static_cast<std::size_t>(c) * h * w;
            for (std::size_t i = 0; i < back.size(); ++i) gc[i] += k * back[i].real();
        }
    });
}

double focal_frequency_loss(const Tensor& gt, const Tensor& gen, double alpha) {
    return focal_frequency_loss(ad::constant(gen), gt, alpha).value()[0];
}

ad::Var gram_matrix(const ad::Var& features) {
    const Tensor& f = features.value();
    if (f.rank() != 3) fail(ErrorKind::ShapeMismatch, "gram_matrix: expected (C,H,W)");
    const ad::Var flat = ad::reshape(features, {f.channels(), f.height() * f.width()});
    return ad::matmul(flat, ad::transpose(flat));
}

Tensor gram_matrix(const Tensor& features) { return gram_matrix(ad::constant(features)).value(); }

ad::Var style_loss(const ad::Var& gen, const Tensor& gt, const FeatureExtractor& extractor) {
    require_same_shape(gen.value(), gt, "style_loss");
    const auto fgen = extractor.features(gen);
    const auto fgt = extractor.features(gt);
    ad::Var total;
    for (std::size_t l = 0; l < fgen.size(); ++l) {
        const Tensor& shape = fgen[l].value();
        const double c = shape.channels(), h = shape.height(), w = shape.width();
        const double norm = extractor.layer_weight(l) / (4.0 * c * c * h * h * w * w);
        const ad::Var diff = ad::sub(gram_matrix(fgen[l]), ad::constant(gram_matrix(fgt[l])));
        const ad::Var term = ad::scale(ad::sum(ad::square(diff)), norm);
        total = total ? ad::add(total, term) : term;
    }
    return total;
}

double style_loss(const Tensor& gen, const Tensor& gt, const FeatureExtractor& extractor) {
    return style_loss(ad::constant(gen), gt, extractor).value()[0];
}

ad::Var perceptual_loss(const ad::Var& gen, const Tensor& gt, const FeatureExtractor& extractor) {
    require_same_shape(gen.value(), gt, "perceptual_loss");
    const auto fgen = extractor.features(gen);
    const auto fgt = extractor.features(gt);
    ad::Var total;
    for (std::size_t l = 0; l < fgen.size(); ++l) {
        const ad::Var term = ad::mse(fgen[l], ad::constant(fgt[l]));
        total = total ? ad::add(total, term) : term;
    }
    return total;
}

double perceptual_loss(const Tensor& gen, const Tensor& gt, const FeatureExtractor& extractor) {
    return perceptual_loss(ad::constant(gen), gt, extractor).value()[0];
}

TotalLoss total_loss(const ad::Var& gen, const Tensor& gt, const LossWeights& weights, const FeatureExtractor& extractor,
                     double ffl_alpha) {
    weights.validate();
    require_same_shape(gen.value(), gt, "total_loss");
    const ad::Var l_mse = ad::mse(gen, ad::constant(gt));
    const ad::Var l_perc = perceptual_loss(gen, gt, extractor);
    const ad::Var l_ffl = focal_frequency_loss(gen, gt, ffl_alpha);
    const ad::Var l_style = style_loss(gen, gt, extractor);
    TotalLoss out;
    out.value = ad::add(ad::add(ad::scale(l_mse, weights.mse), ad::scale(l_perc, weights.perceptual)),
                        ad::add(ad::scale(l_ffl, weights.ffl), ad::scale(l_style, weights.style)));
    out.terms = {out.value.value()[0], l_mse.value()[0], l_perc.value()[0], l_ffl.value()[0], l_style.value()[0]};
    return out;
}

LossBreakdown total_loss(const Tensor& gen, const Tensor& gt, const LossWeights& weights,
                         const FeatureExtractor& extractor, double ffl_alpha) {
    return total_loss(ad::constant(gen), gt, weights, extractor, ffl_alpha).terms;
}

}  // namespace smartbrush
