#pragma once

#include <filesystem>

#include "cxr/image.hpp"

namespace cxr::io {

/// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA or palette) or binary PGM (P5).
/// Colour inputs are converted with the BT.601 luma weights; alpha is ignored.
GrayImage read_gray(const std::filesystem::path& path);

/// Reads a PNG or PGM as RGB. Gray inputs are replicated into three channels.
RgbImage read_rgb(const std::filesystem::path& path);

/// Intensities are rounded to the nearest integer and clamped to [0, 255].
void write_gray_png(const GrayImage& img, const std::filesystem::path& path);
void write_rgb_png(const RgbImage& img, const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Linearly maps [min, max] of a signed raster onto [0, 255] for viewing.
GrayImage normalize_for_display(const GrayImage& img);

}  // namespace cxr::io
