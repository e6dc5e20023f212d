#include "smartbrush/tensor.hpp"

#include "smartbrush/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace smartbrush {

namespace {

std::size_t element_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) fail(ErrorKind::InvalidArgument, "negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
        fail(ErrorKind::ShapeMismatch, "tensor data size does not match shape " + shape_string());
    }
}

std::span<double> Tensor::channel(int c) {
    const std::size_t plane = static_cast<std::size_t>(height()) * width();
    return {data_.data() + plane * c, plane};
}

std::span<const double> Tensor::channel(int c) const {
    const std::size_t plane = static_cast<std::size_t>(height()) * width();
    return {data_.data() + plane * c, plane};
}

Tensor Tensor::channel_image(int c) const {
    auto src = channel(c);
    return Tensor({1, height(), width()}, std::vector<double>(src.begin(), src.end()));
}

void Tensor::set_channel(int c, const Tensor& plane) {
    if (plane.size() != static_cast<std::size_t>(height()) * width()) {
        fail(ErrorKind::ShapeMismatch, "set_channel: plane size mismatch");
    }
    std::copy(plane.data().begin(), plane.data().end(), channel(c).begin());
}

Tensor Tensor::crop(int y0, int x0, int h, int w) const {
    if (y0 < 0 || x0 < 0 || y0 + h > height() || x0 + w > width()) {
        fail(ErrorKind::InvalidArgument, "crop window outside image");
    }
    Tensor out = Tensor::image(channels(), h, w);
    for (int c = 0; c < channels(); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = at(c, y0 + y, x0 + x);
    return out;
}

void Tensor::paste(const Tensor& src, int y0, int x0) {
    if (src.channels() != channels() || y0 < 0 || x0 < 0 || y0 + src.height() > height() ||
        x0 + src.width() > width()) {
        fail(ErrorKind::InvalidArgument, "paste window outside image");
    }
    for (int c = 0; c < src.channels(); ++c)
        for (int y = 0; y < src.height(); ++y)
            for (int x = 0; x < src.width(); ++x) at(c, y0 + y, x0 + x) = src.at(c, y, x);
}

Tensor Tensor::reshaped(std::vector<int> shape) const { return Tensor(std::move(shape), data_); }

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ')';
    return os.str();
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }
double Tensor::mean() const { return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size()); }
double Tensor::min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }
double Tensor::max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::clamp(double lo, double hi) {
    for (double& v : data_) v = std::clamp(v, lo, hi);
}

Tensor concat_channels(std::span<const Tensor> parts) {
    if (parts.empty()) fail(ErrorKind::InvalidArgument, "concat_channels: no inputs");
    const int h = parts.front().height();
    const int w = parts.front().width();
    int c = 0;
    for (const auto& p : parts) {
        if (p.rank() != 3 || p.height() != h || p.width() != w) {
            fail(ErrorKind::ShapeMismatch, "concat_channels: spatial size mismatch");
        }
        c += p.channels();
    }
    Tensor out = Tensor::image(c, h, w);
    auto it = out.data().begin();
    for (const auto& p : parts) it = std::copy(p.data().begin(), p.data().end(), it);
    return out;
}

Tensor resize_bilinear(const Tensor& img, int height, int width) {
    if (img.height() == height && img.width() == width) return img;
    Tensor out = Tensor::image(img.channels(), height, width);
    const double sy = static_cast<double>(img.height()) / height;
    const double sx = static_cast<double>(img.width()) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double tx = fx - x0;
            for (int c = 0; c < img.channels(); ++c) {
                const double top = img.at(c, y0, x0) * (1 - tx) + img.at(c, y0, x1) * tx;
                const double bot = img.at(c, y1, x0) * (1 - tx) + img.at(c, y1, x1) * tx;
                out.at(c, y, x) = top * (1 - ty) + bot * ty;
            }
        }
    }
    return out;
}

Tensor downsample_mean(const Tensor& img, int factor) {
    if (factor < 1 || img.height() % factor || img.width() % factor) {
        fail(ErrorKind::InvalidArgument, "downsample_mean: factor must divide image size");
    }
    Tensor out = Tensor::image(img.channels(), img.height() / factor, img.width() / factor);
    const double inv = 1.0 / (factor * factor);
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) out.at(c, y / factor, x / factor) += img.at(c, y, x) * inv;
    return out;
}

double mse(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "mse: shape mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "max_abs_diff: shape mismatch");
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace smartbrush
