#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cxr/features.hpp"

namespace cxr::resampling {

/// Desired sample count per class index. Classes without an entry keep their
/// current count.
struct SamplingStrategy {
    std::map<int, std::size_t> targets;

    /// Parses "normal=1200,lung_opacity=1200,..." or "all=1500".
    static SamplingStrategy parse(std::string_view text);
    std::string to_string() const;
};

struct SmoteParams {
    std::size_t k_neighbors = 5;
    std::uint64_t seed = 0;
};

/// Provenance of one synthetic row: out = X[seed_row] + lambda * (X[neighbor_row] - X[seed_row]).
struct SyntheticOrigin {
    std::size_t output_row = 0;
    std::size_t seed_row = 0;      // index into the input matrix
    std::size_t neighbor_row = 0;  // index into the input matrix
    double lambda = 0.0;
};

struct SmoteResult {
    features::FeatureMatrix X;
    std::vector<int> y;
    std::vector<SyntheticOrigin> origins;
    std::vector<std::string> warnings;  // k clipping notices
};

/// Indices (into `rows`) of the k rows closest to rows[i] in Euclidean distance,
/// excluding i itself; ties go to the lower index.
std::vector<std::size_t> k_nearest_same_class(const features::FeatureMatrix& X, std::span<const std::size_t> rows,
                                              std::size_t i, std::size_t k);

/// SMOTE oversampling. Input rows come first, unchanged and in order; synthetic
/// rows follow, grouped by ascending class index. For each synthetic row the
/// stream draws, in order: a seed row (uniform over the class), one of its k
/// nearest same-class neighbours (uniform), and lambda ~ U[0, 1). k is clipped
/// to count - 1 for small classes.
SmoteResult fit_resample(const features::FeatureMatrix& X, const std::vector<int>& y, const SamplingStrategy& strategy,
                         const SmoteParams& params);

/// Strategy presets. smote1 and smote2 carry the absolute targets 1200 and
/// 1500 per class; when `absolute` is false the target is rescaled to the
/// training split by the ratio target / 1200 applied to the largest class
/// count, never below that count.
SamplingStrategy preset(std::string_view name, const std::vector<int>& y, bool absolute);

}  // namespace cxr::resampling
