#pragma once

// Brute-force reference implementations. They deliberately avoid the
// library's code paths (no separable DFT, no autograd, no Eigen sqrt of the
// symmetrized product) so that agreement is meaningful.

#include "smartbrush/losses.hpp"
#include "smartbrush/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace smartbrush::oracle {

/// Direct O(M^2 N^2) unitary 2-D DFT.
inline std::vector<std::complex<double>> direct_dft(const Tensor& img, int c) {
    const int m = img.height(), n = img.width();
    std::vector<std::complex<double>> out(static_cast<std::size_t>(m) * n);
    for (int u = 0; u < m; ++u)
        for (int v = 0; v < n; ++v) {
            std::complex<double> acc = 0;
            for (int y = 0; y < m; ++y)
                for (int x = 0; x < n; ++x) {
                    const double ang = -2 * std::numbers::pi * (static_cast<double>(u) * y / m + static_cast<double>(v) * x / n);
                    acc += img.at(c, y, x) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[static_cast<std::size_t>(u) * n + v] = acc / std::sqrt(static_cast<double>(m) * n);
        }
    return out;
}

/// Spectrum weights w(u,v) per channel at the given pair.
inline std::vector<std::vector<double>> ffl_weights(const Tensor& gt, const Tensor& gen, double alpha) {
    std::vector<std::vector<double>> out;
    for (int c = 0; c < gt.channels(); ++c) {
        const auto fg = direct_dft(gt, c), ff = direct_dft(gen, c);
        std::vector<double> w(fg.size());
        double mx = 0;
        for (std::size_t i = 0; i < w.size(); ++i) mx = std::max(mx, w[i] = std::pow(std::abs(fg[i] - ff[i]), alpha));
        for (double& v : w) v = mx > 0 ? v / mx : 0.0;
        out.push_back(std::move(w));
    }
    return out;
}

inline double ffl_with_weights(const Tensor& gt, const Tensor& gen, const std::vector<std::vector<double>>& w) {
    const double mn = static_cast<double>(gt.height()) * gt.width();
    double total = 0;
    for (int c = 0; c < gt.channels(); ++c) {
        const auto fg = direct_dft(gt, c), ff = direct_dft(gen, c);
        double acc = 0;
        for (std::size_t i = 0; i < fg.size(); ++i) acc += w[c][i] * std::norm(fg[i] - ff[i]);
        total += acc / mn;
    }
    return total / gt.channels();
}

inline double ffl(const Tensor& gt, const Tensor& gen, double alpha) {
    return ffl_with_weights(gt, gen, ffl_weights(gt, gen, alpha));
}

inline Tensor gram(const Tensor& f) {
    Tensor g = Tensor::matrix(f.channels(), f.channels());
    for (int i = 0; i < f.channels(); ++i)
        for (int j = 0; j < f.channels(); ++j) {
            double acc = 0;
            for (int y = 0; y < f.height(); ++y)
                for (int x = 0; x < f.width(); ++x) acc += f.at(i, y, x) * f.at(j, y, x);
            g.at(i, j) = acc;
        }
    return g;
}

/// Straight 6-loop zero-padded convolution.
inline Tensor conv(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    const int co = w.dim(0), ci = w.dim(1), k = w.dim(2);
    const int ho = (x.height() + 2 * pad - k) / stride + 1, wo = (x.width() + 2 * pad - k) / stride + 1;
    Tensor out = Tensor::image(co, ho, wo);
    for (int o = 0; o < co; ++o)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double acc = b.empty() ? 0.0 : b[o];
                for (int i = 0; i < ci; ++i)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride + ky - pad, ix = ox * stride + kx - pad;
                            if (iy < 0 || ix < 0 || iy >= x.height() || ix >= x.width()) continue;
                            acc += w[((static_cast<std::size_t>(o) * ci + i) * k + ky) * k + kx] * x.at(i, iy, ix);
                        }
                out.at(o, oy, ox) = acc;
            }
    return out;
}

inline std::vector<Tensor> features(const FeatureExtractor& fx, const Tensor& x) {
    if (fx.is_identity()) return {x};
    std::vector<Tensor> out;
    Tensor cur = x;
    for (const auto& layer : fx.layers()) {
        cur = conv(cur, layer.weight, layer.bias, layer.stride, 1);
        for (double& v : cur.data()) v = std::tanh(v);
        out.push_back(cur);
    }
    return out;
}

inline double style(const Tensor& gen, const Tensor& gt, const FeatureExtractor& fx) {
    const auto a = features(fx, gen), b = features(fx, gt);
    double total = 0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        const Tensor ga = gram(a[l]), gb = gram(b[l]);
        double fro = 0;
        for (std::size_t i = 0; i < ga.size(); ++i) fro += (ga[i] - gb[i]) * (ga[i] - gb[i]);
        const double c = a[l].channels(), h = a[l].height(), w = a[l].width();
        total += fx.layer_weight(l) * fro / (4 * c * c * h * h * w * w);
    }
    return total;
}

inline double perceptual(const Tensor& gen, const Tensor& gt, const FeatureExtractor& fx) {
    const auto a = features(fx, gen), b = features(fx, gt);
    double total = 0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        double acc = 0;
        for (std::size_t i = 0; i < a[l].size(); ++i) acc += (a[l][i] - b[l][i]) * (a[l][i] - b[l][i]);
        total += acc / a[l].size();
    }
    return total;
}

/// SSIM through full-image Gaussian-filtered moment maps (the filtering
/// formulation), cropped to fully-contained windows.
inline double ssim(const Tensor& a, const Tensor& b) {
    const int r = 5;
    std::vector<double> g(11);
    double s = 0;
    for (int i = 0; i < 11; ++i) s += (g[i] = std::exp(-(i - r) * (i - r) / (2 * 1.5 * 1.5)));
    for (double& v : g) v /= s;
    auto filt = [&](const std::vector<double>& img, int h, int w) {
        std::vector<double> tmp(static_cast<std::size_t>(h) * (w - 10)), out(static_cast<std::size_t>(h - 10) * (w - 10));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w - 10; ++x) {
                double acc = 0;
                for (int k = 0; k < 11; ++k) acc += g[k] * img[y * w + x + k];
                tmp[y * (w - 10) + x] = acc;
            }
        for (int y = 0; y < h - 10; ++y)
            for (int x = 0; x < w - 10; ++x) {
                double acc = 0;
                for (int k = 0; k < 11; ++k) acc += g[k] * tmp[(y + k) * (w - 10) + x];
                out[y * (w - 10) + x] = acc;
            }
        return out;
    };
    const double c1 = 1e-4, c2 = 9e-4;
    const int h = a.height(), w = a.width();
    double total = 0;
    std::size_t count = 0;
    for (int c = 0; c < a.channels(); ++c) {
        std::vector<double> pa(a.channel(c).begin(), a.channel(c).end()), pb(b.channel(c).begin(), b.channel(c).end());
        std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            aa[i] = pa[i] * pa[i];
            bb[i] = pb[i] * pb[i];
            ab[i] = pa[i] * pb[i];
        }
        const auto ma = filt(pa, h, w), mb = filt(pb, h, w), saa = filt(aa, h, w), sbb = filt(bb, h, w), sab = filt(ab, h, w);
        for (std::size_t i = 0; i < ma.size(); ++i) {
            const double va = saa[i] - ma[i] * ma[i], vb = sbb[i] - mb[i] * mb[i], cv = sab[i] - ma[i] * mb[i];
            total += (2 * ma[i] * mb[i] + c1) * (2 * cv + c2) / ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / count;
}

/// Fréchet distance with Tr sqrt(S1 S2) from Denman-Beavers iteration on the
/// non-symmetric product.
inline double frechet(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    auto fit = [](const std::vector<std::vector<double>>& s) {
        const int n = static_cast<int>(s.size()), d = static_cast<int>(s[0].size());
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
        for (const auto& v : s)
            for (int j = 0; j < d; ++j) mu(j) += v[j] / n;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        for (const auto& v : s)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) cov(i, j) += (v[i] - mu(i)) * (v[j] - mu(j)) / (n - 1);
        return std::pair{mu, cov};
    };
    const auto [m1, s1] = fit(a);
    const auto [m2, s2] = fit(b);
    Eigen::MatrixXd y = s1 * s2;
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(y.rows(), y.cols());
    for (int it = 0; it < 100; ++it) {
        const Eigen::MatrixXd yi = y.inverse(), zi = z.inverse();
        y = 0.5 * (y + zi);
        z = 0.5 * (z + yi);
    }
    return (m1 - m2).squaredNorm() + s1.trace() + s2.trace() - 2 * y.trace();
}

/// Same distance through the eigenvalues of S1 S2, which stay real and
/// non-negative for PSD factors; safe for rank-deficient covariances.
inline double frechet_eig(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    auto fit = [](const std::vector<std::vector<double>>& s) {
        const int n = static_cast<int>(s.size()), d = static_cast<int>(s[0].size());
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
        for (const auto& v : s)
            for (int j = 0; j < d; ++j) mu(j) += v[j] / n;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        for (const auto& v : s)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) cov(i, j) += (v[i] - mu(i)) * (v[j] - mu(j)) / (n - 1);
        return std::pair{mu, cov};
    };
    const auto [m1, s1] = fit(a);
    const auto [m2, s2] = fit(b);
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(s1 * s2, false);
    double root_trace = 0;
    for (const auto& l : eig.eigenvalues()) root_trace += std::sqrt(std::max(0.0, l.real()));
    return (m1 - m2).squaredNorm() + s1.trace() + s2.trace() - 2 * root_trace;
}

/// NCC by direct double loop at one offset (joint over channels).
inline double ncc_at(const Tensor& t, const Tensor& r, int oy, int ox) {
    const int c = t.channels(), th = t.height(), tw = t.width();
    double tm = 0, rm = 0;
    const double n = static_cast<double>(c) * th * tw;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x) {
                tm += t.at(ch, y, x) / n;
                rm += r.at(ch, oy + y, ox + x) / n;
            }
    double num = 0, dt = 0, dr = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x) {
                const double a = t.at(ch, y, x) - tm, b = r.at(ch, oy + y, ox + x) - rm;
                num += a * b;
                dt += a * a;
                dr += b * b;
            }
    if (dt == 0 || dr == 0) return 0.0;
    return num / std::sqrt(dt * dr);
}

}  // namespace smartbrush::oracle
