#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cxr/image.hpp"

namespace cxr::explain {

/// Per-pixel segment ids over a regular grid.
struct SuperpixelMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t num_segments = 0;
    std::vector<std::uint32_t> segment;  // row-major, one id per pixel

    std::uint32_t at(std::size_t x, std::size_t y) const { return segment[y * width + x]; }
};

/// Partitions the image into grid x grid rectangles. Extents are
/// floor(side / grid); the last (side mod grid) rows/columns of cells are one
/// pixel larger. Segment id = cell_row * grid + cell_col.
SuperpixelMap segment(const GrayImage& img, std::size_t grid = 8);

struct PerturbationBatch {
    std::size_t rows = 0;
    std::size_t num_segments = 0;
    std::vector<std::uint8_t> masks;  // rows * num_segments, row 0 all ones
    std::uint64_t seed = 0;

    std::span<const std::uint8_t> mask(std::size_t i) const { return {masks.data() + i * num_segments, num_segments}; }
};

/// Row 0 keeps every segment; rows 1.. are i.i.d. Bernoulli(0.5) per entry.
PerturbationBatch sample_perturbations(std::size_t n, std::size_t num_segments, std::uint64_t seed);

struct FillRule {
    enum class Kind { Mean, Constant };
    Kind kind = Kind::Mean;
    double value = 0.0;  // used by Constant
};

/// Segments whose mask entry is 0 are replaced by the fill value (default: the
/// global mean intensity of img).
GrayImage apply_mask(const GrayImage& img, const SuperpixelMap& seg, std::span<const std::uint8_t> mask,
                     FillRule fill = {});

inline constexpr double kDefaultKernelWidth = 0.25;

/// exp(-d^2 / width^2), d = cosine distance between the mask and the all-ones
/// vector. An all-zero mask has d = 1.
double kernel_weight(std::span<const std::uint8_t> mask, double width = kDefaultKernelWidth);

struct Explanation {
    int class_id = 0;
    std::vector<double> segment_weights;
    double intercept = 0.0;
    double kernel_width = kDefaultKernelWidth;
    double fidelity_r2 = 0.0;
    std::size_t num_samples = 0;
};

/// Weighted ridge fit of target-class scores on the masks:
/// minimise sum_i w_i (f_i - b0 - b.m_i)^2 + ridge |b|^2 (intercept unpenalised).
/// preds is row-major n x classes. Fidelity is the weighted R^2 of the fit.
Explanation fit_surrogate(const PerturbationBatch& batch, std::span<const double> preds, std::size_t classes,
                          std::span<const double> weights, int target, double ridge);

struct LimeParams {
    std::size_t grid = 8;
    std::size_t num_samples = 1000;
    double kernel_width = kDefaultKernelWidth;
    double ridge = 1.0;
    std::uint64_t seed = 0;
    FillRule fill;
};

/// Class-probability black box over images.
using ImageClassifier = std::function<std::vector<double>(const GrayImage&)>;

/// Segments, perturbs, scores every perturbed image once, then fits one
/// surrogate per requested class against that class's probability.
std::vector<Explanation> explain_classes(const GrayImage& img, const ImageClassifier& model,
                                         std::span<const int> targets, const LimeParams& params = {});

Explanation explain_instance(const GrayImage& img, const ImageClassifier& model, int target,
                             const LimeParams& params = {});

inline constexpr double kOverlayAlpha = 0.4;

/// Tints the top_k segments by |weight| (ties: lower id): green for positive
/// weights, red for negative, blended at alpha 0.4 over the gray image.
/// Zero-weight segments are never tinted.
RgbImage render_overlay(const GrayImage& img, const SuperpixelMap& seg, const Explanation& e, std::size_t top_k = 10);

/// Segment ids selected for tinting by render_overlay.
std::vector<std::size_t> top_segments(const Explanation& e, std::size_t top_k);

}  // namespace cxr::explain
