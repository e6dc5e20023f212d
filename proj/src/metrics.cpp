#include "smartbrush/metrics.hpp"

#include "smartbrush/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace smartbrush {

std::vector<double> ssim_window() {
    std::vector<double> g(kSsimWindow);
    double total = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        total += (g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma)));
    }
    std::vector<double> window(kSsimWindow * kSsimWindow);
    for (int y = 0; y < kSsimWindow; ++y)
        for (int x = 0; x < kSsimWindow; ++x) window[y * kSsimWindow + x] = g[y] * g[x] / (total * total);
    return window;
}

double ssim(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "ssim: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    if (a.rank() != 3 || a.height() < kSsimWindow || a.width() < kSsimWindow) {
        fail(ErrorKind::InvalidArgument, "ssim: image " + a.shape_string() + " is smaller than the 11x11 window");
    }
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const auto window = ssim_window();
    const int oh = a.height() - kSsimWindow + 1;
    const int ow = a.width() - kSsimWindow + 1;
    double total = 0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int y = 0; y < kSsimWindow; ++y)
                    for (int x = 0; x < kSsimWindow; ++x) {
                        const double wv = window[y * kSsimWindow + x];
                        const double va = a.at(c, oy + y, ox + x);
                        const double vb = b.at(c, oy + y, ox + x);
                        ma += wv * va;
                        mb += wv * vb;
                        saa += wv * va * va;
                        sbb += wv * vb * vb;
                        sab += wv * va * vb;
                    }
                const double var_a = saa - ma * ma;
                const double var_b = sbb - mb * mb;
                const double cov = sab - ma * mb;
                total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            }
        }
    }
    return total / (static_cast<double>(a.channels()) * oh * ow);
}

namespace {

struct Gaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

Gaussian fit(const FeatureSet& samples, std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (samples[i].size() != dim) fail(ErrorKind::ShapeMismatch, "frechet_distance: feature dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) x(i, static_cast<Eigen::Index>(j)) = samples[i][j];
    }
    Gaussian g;
    g.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - g.mean.transpose();
    g.cov = centered.transpose() * centered / static_cast<double>(n - 1);
    return g;
}

// Symmetric PSD square root; eigenvalues slightly below zero are clamped,
// clearly negative ones are reported.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) fail(ErrorKind::Numerical, std::string("frechet_distance: eigensolver failed on ") + what);
    Eigen::VectorXd values = eig.eigenvalues();
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    if (lo < -1e-6) {
        std::ostringstream os;
        os << "frechet_distance: " << what << " is not positive semidefinite (min eigenvalue " << lo
           << ", max eigenvalue " << hi << ", condition " << (lo != 0 ? std::abs(hi / lo) : 0.0) << ")";
        fail(ErrorKind::Numerical, os.str());
    }
    values = values.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const FeatureSet& a, const FeatureSet& b) {
    if (a.size() < 2 || b.size() < 2) fail(ErrorKind::InvalidArgument, "frechet_distance: need at least 2 samples per set");
    const std::size_t dim = a.front().size();
    if (dim == 0 || b.front().size() != dim) fail(ErrorKind::ShapeMismatch, "frechet_distance: feature dimension mismatch");
    const Gaussian ga = fit(a, dim);
    const Gaussian gb = fit(b, dim);
    if (ga.mean == gb.mean && ga.cov == gb.cov) return 0.0;

    // Tr (S1 S2)^{1/2} = Tr (S1^{1/2} S2 S1^{1/2})^{1/2}; the inner product is symmetric.
    const Eigen::MatrixXd root_a = psd_sqrt(ga.cov, "covariance of set A");
    const Eigen::MatrixXd inner = root_a * gb.cov * root_a;
    const Eigen::MatrixXd cross = psd_sqrt(inner, "covariance product");
    const double mean_term = (ga.mean - gb.mean).squaredNorm();
    const double value = mean_term + ga.cov.trace() + gb.cov.trace() - 2.0 * cross.trace();
    return std::max(0.0, value);
}

}  // namespace smartbrush
