#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace smartbrush {

/// Dense row-major tensor of doubles. Images are rank-3 (channels, height,
/// width); matrices are rank-2 (rows, cols).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor image(int channels, int height, int width, double fill = 0.0) {
        return Tensor({channels, height, width}, fill);
    }
    static Tensor matrix(int rows, int cols, double fill = 0.0) { return Tensor({rows, cols}, fill); }

    const std::vector<int>& shape() const noexcept { return shape_; }
    int rank() const noexcept { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }
    double* ptr() noexcept { return data_.data(); }
    const double* ptr() const noexcept { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Rank-3 accessors (c, y, x).
    int channels() const { return dim(0); }
    int height() const { return dim(1); }
    int width() const { return dim(2); }
    double& at(int c, int y, int x) {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    double at(int c, int y, int x) const {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    // Rank-2 accessors (row, col).
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

    std::span<double> channel(int c);
    std::span<const double> channel(int c) const;

    /// Copy of one channel as a (1, H, W) image.
    Tensor channel_image(int c) const;
    void set_channel(int c, const Tensor& plane);

    /// Sub-window of a rank-3 tensor; the window must lie inside the image.
    Tensor crop(int y0, int x0, int height, int width) const;
    void paste(const Tensor& src, int y0, int x0);

    Tensor reshaped(std::vector<int> shape) const;

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
    std::string shape_string() const;

    double sum() const;
    double mean() const;
    double min() const;
    double max() const;

    void fill(double v);
    void clamp(double lo, double hi);

    friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

/// Concatenate rank-3 tensors along the channel axis.
Tensor concat_channels(std::span<const Tensor> parts);

/// Bilinear resampling of every channel to (height, width), pixel-center aligned.
Tensor resize_bilinear(const Tensor& img, int height, int width);

/// Area-average downsampling by an integer factor.
Tensor downsample_mean(const Tensor& img, int factor);

double mse(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace smartbrush
