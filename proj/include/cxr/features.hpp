#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cxr/image.hpp"

namespace cxr::features {

struct HogParams {
    std::size_t cell_size = 8;     // pixels
    std::size_t block_size = 2;    // cells
    std::size_t block_stride = 1;  // cells
    std::size_t orientations = 9;
    bool signed_gradients = false;  // false: bins over [0, 180), true: [0, 360)
    double clip = 0.2;              // L2-Hys clip threshold

    void validate() const;
    /// Descriptor length for an image of the given size.
    std::size_t descriptor_length(std::size_t width, std::size_t height) const;
    /// e.g. "hog:c8:b2:s1:o9:unsigned:l2hys0.2"
    std::string id() const;

    bool operator==(const HogParams&) const = default;
};

struct FeatureVector {
    std::vector<double> values;
    std::string descriptor_id;
};

/// Histogram of oriented gradients.
///
/// Gradients are central differences [-1, 0, 1] with replicated borders. Each
/// pixel votes its gradient magnitude into the two nearest orientation bins of
/// its cell; bin b is centred on b * range / orientations degrees and votes
/// wrap around the range. Blocks of block_size^2 cells are L2-Hys normalised
/// and concatenated in row-major block order, cell order within a block
/// row-major, bins innermost.
FeatureVector hog(const GrayImage& img, const HogParams& params = {});

struct PixelTensor {
    std::size_t side = 0;
    std::vector<double> values;  // side * side, row-major, in [0, 1]
};

/// Resizes to side x side and divides by 255 (clamped to [0, 1]).
PixelTensor to_pixel_tensor(const GrayImage& img, std::size_t side);

/// How an enhanced image becomes a classifier input. Serialised into feature
/// files and model files as its descriptor id so a model knows its input form.
struct Extractor {
    enum class Kind { Hog, Pixels };
    Kind kind = Kind::Hog;
    std::size_t side = 128;  // image is resized to side x side first
    HogParams hog;

    std::string id() const;  // "hog128:c8:b2:..." or "pixels64"
    static Extractor parse(const std::string& id);
    std::vector<double> extract(const GrayImage& img) const;
    std::size_t dimension() const;
};

/// Row-major matrix of feature rows; FEAT1 on disk.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::string descriptor_id;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }
    void append(std::span<const double> r);
};

/// Binary layout, little-endian: "FEAT1", u64 rows, u64 dim, u32 id length,
/// id bytes, then rows * dim float32 values.
void write_feat(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feat(const std::filesystem::path& path);

/// Sidecar CSV "<path>.labels.csv" with one `label` column of class names.
std::filesystem::path labels_path(const std::filesystem::path& feat_path);
void write_labels(const std::vector<int>& labels, const std::filesystem::path& path);
std::vector<int> read_labels(const std::filesystem::path& path);

}  // namespace cxr::features
