#pragma once

#include <cstddef>

#include "cxr/image.hpp"

namespace cxr::imaging {

/// 4-neighbour discrete Laplacian.
inline const Kernel3x3 kLaplacianKernel{{0, 1, 0, 1, -4, 1, 0, 1, 0}};
/// Sharpening kernel; equals identity minus kLaplacianKernel, so S = I - lap(I).
inline const Kernel3x3 kSharpenKernel{{0, -1, 0, -1, 5, -1, 0, -1, 0}};
inline const Kernel3x3 kSobelX{{-1, 0, 1, -2, 0, 2, -1, 0, 1}};
inline const Kernel3x3 kSobelY{{-1, -2, -1, 0, 0, 0, 1, 2, 1}};

inline constexpr double kDefaultGamma = 0.8;
/// Guards the mask normaliser on images with no gradient.
inline constexpr double kMaskEpsilon = 1e-12;

/// ITU-R BT.601 luma: Y = 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const GrayImage& red, const GrayImage& green, const GrayImage& blue);
GrayImage to_grayscale(const RgbImage& rgb);

/// Bilinear resize with corner-aligned sampling: output pixel i maps to source
/// coordinate i * (in - 1) / (out - 1). A target extent of 1 samples the centre.
GrayImage resize(const GrayImage& img, std::size_t width, std::size_t height);

/// Same-size 3x3 correlation with replicate borders. No clamping.
GrayImage convolve3x3(const GrayImage& img, const Kernel3x3& kernel);

GrayImage laplacian(const GrayImage& img);
GrayImage sharpen(const GrayImage& img);
GrayImage sobel_magnitude(const GrayImage& img);

/// I' = 255 (I / 255)^gamma. Input must lie in [0, 255].
GrayImage power_law(const GrayImage& img, double gamma);

/// Intermediate rasters produced by enhance().
struct EnhancementTrace {
    GrayImage laplacian;    // L, signed
    GrayImage sharpened;    // S
    GrayImage difference;   // B = S - L
    GrayImage sobel;        // G >= 0
    GrayImage mask;         // M = (G / max(max G, eps)) * B
    GrayImage fused;        // F = L + M, before clamping
    double mask_scale = 0;  // max(max G, eps), the divisor applied to G
    double gamma = kDefaultGamma;
};

struct Enhanced {
    GrayImage image;
    EnhancementTrace trace;
};

/// Full enhancement chain on an already resized grayscale image:
/// L, S, B = S - L, G, M = G_hat * B, F = L + M, clamp to [0, 255], power law.
Enhanced enhance(const GrayImage& img, double gamma = kDefaultGamma);

}  // namespace cxr::imaging
