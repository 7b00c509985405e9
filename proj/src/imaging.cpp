#include "cxr/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cxr/errors.hpp"

namespace cxr::imaging {

namespace {

void require_same_dims(const GrayImage& a, const GrayImage& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionError(std::string(what) + ": channel dimensions differ (" +
                             std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                             std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
}

// Source coordinate for output index i under the corner-aligned mapping.
double source_coord(std::size_t i, std::size_t in, std::size_t out) {
    if (out == 1) return 0.5 * static_cast<double>(in - 1);
    return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
}

}  // namespace

GrayImage to_grayscale(const GrayImage& red, const GrayImage& green, const GrayImage& blue) {
    require_same_dims(red, green, "to_grayscale");
    require_same_dims(red, blue, "to_grayscale");
    GrayImage out(red.width(), red.height());
    auto dst = out.pixels();
    const auto r = red.pixels(), g = green.pixels(), b = blue.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

GrayImage to_grayscale(const RgbImage& rgb) {
    GrayImage out(rgb.width(), rgb.height());
    auto dst = out.pixels();
    const auto src = rgb.data();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    return out;
}

GrayImage resize(const GrayImage& img, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw ArgumentError("resize: target dimensions must be >= 1");
    if (img.empty()) throw ArgumentError("resize: empty source image");
    if (width == img.width() && height == img.height()) return img;

    GrayImage out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        const double sy = source_coord(y, img.height(), height);
        const auto y0 = static_cast<std::size_t>(std::floor(sy));
        const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double sx = source_coord(x, img.width(), width);
            const auto x0 = static_cast<std::size_t>(std::floor(sx));
            const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = img.at(x0, y0) + fx * (img.at(x1, y0) - img.at(x0, y0));
            const double bottom = img.at(x0, y1) + fx * (img.at(x1, y1) - img.at(x0, y1));
            // Convex combination; clamp against last-ulp drift outside the source range.
            const double v = top + fy * (bottom - top);
            out.at(x, y) = std::clamp(v, std::min(top, bottom), std::max(top, bottom));
        }
    }
    return out;
}

GrayImage convolve3x3(const GrayImage& img, const Kernel3x3& kernel) {
    if (img.empty()) throw ArgumentError("convolve3x3: empty image");
    for (double c : kernel.coefficients)
        if (!std::isfinite(c)) throw ArgumentError("convolve3x3: non-finite kernel coefficient");

    const auto w = static_cast<std::ptrdiff_t>(img.width());
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    GrayImage out(img.width(), img.height());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j)
                for (int i = 0; i < 3; ++i) {
                    const double k = kernel.at(i, j);
                    if (k != 0.0) acc += k * img.clamped(x + i - 1, y + j - 1);
                }
            out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
        }
    }
    return out;
}

GrayImage laplacian(const GrayImage& img) { return convolve3x3(img, kLaplacianKernel); }

GrayImage sharpen(const GrayImage& img) { return convolve3x3(img, kSharpenKernel); }

GrayImage sobel_magnitude(const GrayImage& img) {
    const GrayImage gx = convolve3x3(img, kSobelX);
    const GrayImage gy = convolve3x3(img, kSobelY);
    GrayImage out(img.width(), img.height());
    auto dst = out.pixels();
    const auto px = gx.pixels(), py = gy.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::hypot(px[i], py[i]);
    return out;
}

GrayImage power_law(const GrayImage& img, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ArgumentError("power_law: gamma must be a positive finite number");
    GrayImage out = img;
    for (double& v : out.pixels()) {
        if (v < 0.0 || v > 255.0) throw ArgumentError("power_law: intensity outside [0, 255]");
        v = 255.0 * std::pow(v / 255.0, gamma);
    }
    return out;
}

Enhanced enhance(const GrayImage& img, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ArgumentError("enhance: gamma must be a positive finite number");

    EnhancementTrace t;
    t.gamma = gamma;
    t.laplacian = laplacian(img);
    t.sharpened = sharpen(img);
    t.sobel = sobel_magnitude(img);
    t.mask_scale = std::max(t.sobel.max(), kMaskEpsilon);

    const std::size_t n = img.size();
    t.difference = GrayImage(img.width(), img.height());
    t.mask = GrayImage(img.width(), img.height());
    t.fused = GrayImage(img.width(), img.height());
    const auto L = t.laplacian.pixels(), S = t.sharpened.pixels(), G = t.sobel.pixels();
    auto B = t.difference.pixels(), M = t.mask.pixels(), F = t.fused.pixels();
    for (std::size_t i = 0; i < n; ++i) {
        B[i] = S[i] - L[i];
        M[i] = (G[i] / t.mask_scale) * B[i];
        F[i] = L[i] + M[i];
    }

    GrayImage out = power_law(t.fused.clamped_to(0.0, 255.0), gamma);
    return {std::move(out), std::move(t)};
}

}  // namespace cxr::imaging
