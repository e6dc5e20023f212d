#include "smartbrush/error.hpp"
#include "smartbrush/losses.hpp"
#include "smartbrush/metrics.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

using namespace smartbrush;
using namespace smartbrush::testing;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("dft2 matches the direct transform and inverts") {
    std::mt19937_64 rng(1);
    const Tensor img = random_tensor({1, 6, 8}, rng);
    const auto fast = dft2(img.channel(0), 6, 8);
    const auto slow = oracle::direct_dft(img, 0);
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) < 1e-12);
    const auto back = idft2(fast, 6, 8);
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(std::abs(back[i].real() - img[i]) < 1e-12);
}

TEST_CASE("focal frequency loss") {
    std::mt19937_64 rng(2);
    SUBCASE("identical images give exactly zero") {
        const Tensor a = random_tensor({3, 8, 8}, rng);
        CHECK(focal_frequency_loss(a, a, 1.0) == 0.0);
    }
    SUBCASE("constant offset with alpha 0 gives c^2") {
        const Tensor gt = random_tensor({1, 4, 4}, rng);
        Tensor gen = gt;
        const double c = 0.3;
        for (double& v : gen.data()) v += c;
        // Oracle: only the DC bin differs, by 4c in unitary scale.
        CHECK(oracle::ffl(gt, gen, 0.0) == doctest::Approx(c * c).epsilon(1e-12));
        CHECK(focal_frequency_loss(gt, gen, 0.0) == doctest::Approx(c * c).epsilon(1e-12));
    }
    SUBCASE("symmetric and matches the direct-DFT oracle") {
        for (double alpha : {0.0, 1.0, 2.0}) {
            const Tensor a = random_tensor({2, 8, 8}, rng), b = random_tensor({2, 8, 8}, rng);
            const double fwd = focal_frequency_loss(a, b, alpha);
            CHECK(rel(fwd, focal_frequency_loss(b, a, alpha)) < 1e-12);
            CHECK(rel(fwd, oracle::ffl(a, b, alpha)) < 1e-9);
            CHECK(fwd >= 0.0);
        }
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(focal_frequency_loss(Tensor::image(1, 4, 4), Tensor::image(1, 4, 5)), Error);
    }
}

TEST_CASE("gram matrix") {
    SUBCASE("all-ones 2x2 channel") {
        const Tensor g = gram_matrix(Tensor::image(1, 2, 2, 1.0));
        CHECK(g.at(0, 0) == 4.0);
    }
    SUBCASE("orthogonal channels") {
        Tensor f = Tensor::image(2, 2, 2);
        f.at(0, 0, 0) = 1;
        f.at(0, 1, 1) = 2;
        f.at(1, 0, 1) = 3;
        f.at(1, 1, 0) = 4;
        const Tensor g = gram_matrix(f);
        CHECK(g.at(0, 1) == 0.0);
        CHECK(g.at(1, 0) == 0.0);
    }
    SUBCASE("brute force and PSD") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            const Tensor f = random_tensor({3, 2, 2}, rng, -1, 1);
            const Tensor g = gram_matrix(f);
            const Tensor ref = oracle::gram(f);
            for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(ref[i]).epsilon(1e-14));
            Eigen::Matrix3d m;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) m(i, j) = g.at(i, j);
            CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m).eigenvalues().minCoeff() >= -1e-9);
        }
    }
}

TEST_CASE("style loss") {
    std::mt19937_64 rng(4);
    const auto fx = FeatureExtractor::random(2, 99);
    SUBCASE("identical inputs") {
        const Tensor a = random_tensor({2, 8, 8}, rng);
        CHECK(style_loss(a, a, fx) == 0.0);
    }
    SUBCASE("spatial permutation under the identity extractor") {
        const Tensor a = random_tensor({2, 4, 4}, rng);
        Tensor b = a;
        for (int c = 0; c < 2; ++c) {
            auto ch = b.channel(c);
            std::reverse(ch.begin(), ch.end());
        }
        CHECK(style_loss(a, b, FeatureExtractor::identity()) == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("1-layer toy extractor on 2-channel 2x2 inputs") {
        FeatureExtractor::Layer layer;
        layer.weight = random_tensor({2, 2, 3, 3}, rng, -1, 1);
        layer.bias = random_tensor({2}, rng, -0.1, 0.1);
        layer.stride = 1;
        const auto toy = FeatureExtractor::from_layers({layer});
        const Tensor a = random_tensor({2, 2, 2}, rng), b = random_tensor({2, 2, 2}, rng);
        CHECK(rel(style_loss(a, b, toy), oracle::style(a, b, toy)) < 1e-10);
    }
}

TEST_CASE("perceptual loss") {
    std::mt19937_64 rng(5);
    const Tensor a = random_tensor({3, 8, 8}, rng), b = random_tensor({3, 8, 8}, rng);
    CHECK(perceptual_loss(a, a, FeatureExtractor::random(3, 1)) == 0.0);
    CHECK(perceptual_loss(a, b, FeatureExtractor::identity()) == doctest::Approx(mse(a, b)).epsilon(1e-14));
    const auto fx = FeatureExtractor::random(3, 7);
    CHECK(rel(perceptual_loss(a, b, fx), oracle::perceptual(a, b, fx)) < 1e-10);
}

TEST_CASE("total loss") {
    std::mt19937_64 rng(6);
    const auto fx = FeatureExtractor::random(3, 11);
    const Tensor a = random_tensor({3, 8, 8}, rng), b = random_tensor({3, 8, 8}, rng);
    const LossBreakdown zero = total_loss(a, a, LossWeights{}, fx);
    CHECK(zero.total == 0.0);
    CHECK(zero.mse == 0.0);
    CHECK(zero.perceptual == 0.0);
    CHECK(zero.ffl == 0.0);
    CHECK(zero.style == 0.0);

    CHECK(total_loss(a, b, LossWeights{1, 0, 0, 0}, fx).total == doctest::Approx(mse(a, b)).epsilon(1e-14));

    const LossBreakdown all = total_loss(a, b, LossWeights{1, 1, 1, 1}, fx);
    const double expected = mse(a, b) + oracle::perceptual(a, b, fx) + oracle::ffl(b, a, 1.0) + oracle::style(a, b, fx);
    CHECK(rel(all.total, expected) < 1e-9);

    CHECK_THROWS_AS(total_loss(a, b, LossWeights{0, 0, 0, 0}, fx), Error);
    CHECK_THROWS_AS(total_loss(a, b, LossWeights{-1, 0, 0, 0}, fx), Error);
}

TEST_CASE("loss gradients match central differences") {
    std::mt19937_64 rng(7);
    const auto fx = FeatureExtractor::random(2, 21);
    for (int trial = 0; trial < 3; ++trial) {
        const Tensor gt = random_tensor({2, 8, 8}, rng), x0 = random_tensor({2, 8, 8}, rng);
        CHECK(grad_check([&](const ad::Var& x) { return ad::mse(x, ad::constant(gt)); }, x0).max_rel_error < 1e-4);
        CHECK(grad_check([&](const ad::Var& x) { return style_loss(x, gt, fx); }, x0).max_rel_error < 1e-4);
        CHECK(grad_check([&](const ad::Var& x) { return perceptual_loss(x, gt, fx); }, x0).max_rel_error < 1e-4);
        // FFL with its spectrum weight frozen at x0: the numeric side uses the
        // oracle with fixed weights.
        const auto w = oracle::ffl_weights(gt, x0, 1.0);
        ad::Var x = ad::leaf(x0);
        ad::backward(focal_frequency_loss(x, gt, 1.0));
        Tensor probe = x0;
        double worst = 0;
        for (std::size_t i = 0; i < x0.size(); ++i) {
            const double h = 1e-5;
            probe[i] = x0[i] + h;
            const double up = oracle::ffl_with_weights(gt, probe, w);
            probe[i] = x0[i] - h;
            const double down = oracle::ffl_with_weights(gt, probe, w);
            probe[i] = x0[i];
            worst = std::max(worst, rel(x.grad()[i], (up - down) / (2 * h)));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("ssim") {
    std::mt19937_64 rng(8);
    const Tensor a = random_tensor({3, 16, 16}, rng), b = random_tensor({3, 16, 16}, rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    CHECK(rel(ssim(a, b), oracle::ssim(a, b)) < 1e-9);

    // Constant 0 vs constant 1: luminance term C1 / (1 + C1), contrast term 1.
    const double expected = 1e-4 / (1.0 + 1e-4);
    CHECK(ssim(Tensor::image(1, 12, 12, 0.0), Tensor::image(1, 12, 12, 1.0)) == doctest::Approx(expected).epsilon(1e-9));

    CHECK_THROWS_AS(ssim(Tensor::image(1, 8, 8), Tensor::image(1, 8, 8)), Error);
    CHECK_THROWS_AS(ssim(Tensor::image(1, 12, 12), Tensor::image(1, 12, 13)), Error);
}

TEST_CASE("frechet distance") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01(0, 1);
    auto sample = [&](int n, int d, double shift) {
        FeatureSet s(n, std::vector<double>(d));
        for (auto& v : s)
            for (auto& x : v) x = n01(rng) + shift;
        return s;
    };
    SUBCASE("identical sets") {
        const auto a = sample(30, 4, 0);
        CHECK(frechet_distance(a, a) < 1e-6);
    }
    SUBCASE("1-D unit mean shift with equal variance") {
        FeatureSet a{{-1}, {1}, {-1}, {1}}, b{{0}, {2}, {0}, {2}};
        CHECK(frechet_distance(a, b) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("equal covariances reduce to the squared mean gap") {
        const auto a = sample(20, 3, 0);
        auto b = a;
        for (auto& v : b) {
            v[0] += 2.0;
            v[2] -= 1.0;
        }
        CHECK(frechet_distance(a, b) == doctest::Approx(5.0).epsilon(1e-6));
    }
    SUBCASE("symmetric and matches the Denman-Beavers oracle") {
        const auto a = sample(40, 5, 0), b = sample(40, 5, 0.3);
        const double ab = frechet_distance(a, b);
        CHECK(std::abs(ab - frechet_distance(b, a)) < 1e-8);
        CHECK(rel(ab, oracle::frechet(a, b)) < 1e-6);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(frechet_distance({{1.0}}, {{1.0}, {2.0}}), Error);
        CHECK_THROWS_AS(frechet_distance({{1.0}, {2.0}}, {{1.0, 2.0}, {2.0, 1.0}}), Error);
    }
}
