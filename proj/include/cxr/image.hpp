#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace cxr {

/// Single-channel raster of double intensities, row-major, nominal range [0, 255].
///
/// Intensities may be signed or exceed 255 for intermediate filter output
/// (Laplacian, difference images); they are always finite.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
    GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    double at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
    double& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }

    /// Pixel lookup with coordinates clamped to the border (replicate padding).
    double clamped(std::ptrdiff_t x, std::ptrdiff_t y) const;

    std::span<const double> pixels() const { return pixels_; }
    std::span<double> pixels() { return pixels_; }

    double min() const;
    double max() const;
    double mean() const;

    /// Copy with every intensity clamped to [lo, hi].
    GrayImage clamped_to(double lo = 0.0, double hi = 255.0) const;

    /// Transposed copy (x and y swapped).
    GrayImage transposed() const;

    bool operator==(const GrayImage&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> pixels_;
};

/// Three-channel raster, interleaved RGB doubles in [0, 255].
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(std::size_t width, std::size_t height);
    RgbImage(std::size_t width, std::size_t height, std::vector<double> interleaved);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }

    std::span<const double, 3> at(std::size_t x, std::size_t y) const {
        return std::span<const double, 3>(data_.data() + 3 * (y * width_ + x), 3);
    }
    std::span<double, 3> at(std::size_t x, std::size_t y) {
        return std::span<double, 3>(data_.data() + 3 * (y * width_ + x), 3);
    }

    std::span<const double> data() const { return data_; }

    /// Gray raster replicated into three channels (values clamped to [0, 255]).
    static RgbImage from_gray(const GrayImage& gray);

    bool operator==(const RgbImage&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

/// 3x3 filter coefficients, row-major. Applied as a correlation:
/// out(x, y) = sum_{i,j} k[j][i] * in(x + i - 1, y + j - 1).
struct Kernel3x3 {
    std::array<double, 9> coefficients{};

    double at(int col, int row) const { return coefficients[static_cast<std::size_t>(row * 3 + col)]; }
    double sum() const;

    static Kernel3x3 identity();
};

}  // namespace cxr
