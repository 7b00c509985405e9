#include "cxr/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cxr/errors.hpp"

namespace cxr {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values)
        if (!std::isfinite(v)) throw ArgumentError(std::string(what) + ": non-finite intensity");
}

}  // namespace

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), pixels_(width * height, fill) {
    if (!std::isfinite(fill)) throw ArgumentError("GrayImage: non-finite fill value");
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width_ * height_)
        throw DimensionError("GrayImage: expected " + std::to_string(width_ * height_) +
                             " pixels, got " + std::to_string(pixels_.size()));
    require_finite(pixels_, "GrayImage");
}

double GrayImage::clamped(std::ptrdiff_t x, std::ptrdiff_t y) const {
    const auto cx = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(width_) - 1);
    const auto cy = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(height_) - 1);
    return pixels_[static_cast<std::size_t>(cy) * width_ + static_cast<std::size_t>(cx)];
}

double GrayImage::min() const {
    return pixels_.empty() ? 0.0 : *std::min_element(pixels_.begin(), pixels_.end());
}

double GrayImage::max() const {
    return pixels_.empty() ? 0.0 : *std::max_element(pixels_.begin(), pixels_.end());
}

double GrayImage::mean() const {
    if (pixels_.empty()) return 0.0;
    return std::accumulate(pixels_.begin(), pixels_.end(), 0.0) / static_cast<double>(pixels_.size());
}

GrayImage GrayImage::clamped_to(double lo, double hi) const {
    GrayImage out = *this;
    for (double& v : out.pixels_) v = std::clamp(v, lo, hi);
    return out;
}

GrayImage GrayImage::transposed() const {
    GrayImage out(height_, width_);
    for (std::size_t y = 0; y < height_; ++y)
        for (std::size_t x = 0; x < width_; ++x) out.at(y, x) = at(x, y);
    return out;
}

RgbImage::RgbImage(std::size_t width, std::size_t height)
    : width_(width), height_(height), data_(width * height * 3, 0.0) {}

RgbImage::RgbImage(std::size_t width, std::size_t height, std::vector<double> interleaved)
    : width_(width), height_(height), data_(std::move(interleaved)) {
    if (data_.size() != width_ * height_ * 3)
        throw DimensionError("RgbImage: expected " + std::to_string(width_ * height_ * 3) +
                             " channel values, got " + std::to_string(data_.size()));
    require_finite(data_, "RgbImage");
}

RgbImage RgbImage::from_gray(const GrayImage& gray) {
    RgbImage out(gray.width(), gray.height());
    const auto src = gray.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(src[i], 0.0, 255.0);
        out.data_[3 * i] = out.data_[3 * i + 1] = out.data_[3 * i + 2] = v;
    }
    return out;
}

double Kernel3x3::sum() const {
    return std::accumulate(coefficients.begin(), coefficients.end(), 0.0);
}

Kernel3x3 Kernel3x3::identity() {
    return Kernel3x3{{0, 0, 0, 0, 1, 0, 0, 0, 0}};
}

}  // namespace cxr
