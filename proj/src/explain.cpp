#include "cxr/explain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr::explain {

namespace {

// Start offset of each of `grid` cells along an axis of length `side`; the
// last (side % grid) cells are one pixel larger.
std::vector<std::size_t> cell_starts(std::size_t side, std::size_t grid) {
    const std::size_t base = side / grid, extra = side % grid;
    std::vector<std::size_t> starts(grid + 1, 0);
    for (std::size_t i = 0; i < grid; ++i) starts[i + 1] = starts[i] + base + (i >= grid - extra ? 1 : 0);
    return starts;
}

}  // namespace

SuperpixelMap segment(const GrayImage& img, std::size_t grid) {
    if (grid < 2) throw ArgumentError("segment: grid must be >= 2");
    if (img.width() < grid || img.height() < grid)
        throw ArgumentError("segment: grid " + std::to_string(grid) + " larger than image side (" +
                            std::to_string(img.width()) + "x" + std::to_string(img.height()) + ")");
    const auto xs = cell_starts(img.width(), grid), ys = cell_starts(img.height(), grid);
    SuperpixelMap map;
    map.width = img.width();
    map.height = img.height();
    map.num_segments = grid * grid;
    map.segment.resize(img.size());
    for (std::size_t r = 0; r < grid; ++r)
        for (std::size_t y = ys[r]; y < ys[r + 1]; ++y)
            for (std::size_t c = 0; c < grid; ++c)
                for (std::size_t x = xs[c]; x < xs[c + 1]; ++x)
                    map.segment[y * map.width + x] = static_cast<std::uint32_t>(r * grid + c);
    return map;
}

PerturbationBatch sample_perturbations(std::size_t n, std::size_t num_segments, std::uint64_t seed) {
    if (n < 2) throw ArgumentError("sample_perturbations: need at least 2 samples");
    if (num_segments < 1) throw ArgumentError("sample_perturbations: need at least 1 segment");
    PerturbationBatch b;
    b.rows = n;
    b.num_segments = num_segments;
    b.seed = seed;
    b.masks.assign(n * num_segments, 1);
    Rng rng(seed);
    for (std::size_t i = num_segments; i < b.masks.size(); ++i) b.masks[i] = rng.bernoulli_half() ? 1 : 0;
    return b;
}

GrayImage apply_mask(const GrayImage& img, const SuperpixelMap& seg, std::span<const std::uint8_t> mask,
                     FillRule fill) {
    if (mask.size() != seg.num_segments)
        throw DimensionError("apply_mask: mask has " + std::to_string(mask.size()) + " entries, expected " +
                             std::to_string(seg.num_segments));
    if (seg.width != img.width() || seg.height != img.height())
        throw DimensionError("apply_mask: superpixel map does not match image dimensions");
    const double value = fill.kind == FillRule::Kind::Mean ? img.mean() : fill.value;
    GrayImage out = img;
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        if (mask[seg.segment[i]] == 0) px[i] = value;
    return out;
}

double kernel_weight(std::span<const std::uint8_t> mask, double width) {
    if (mask.empty()) throw ArgumentError("kernel_weight: empty mask");
    if (!(width > 0.0)) throw ArgumentError("kernel_weight: width must be positive");
    const auto on = static_cast<double>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
    // cos(mask, ones) = on / (sqrt(on) * sqrt(k)) = sqrt(on / k) for binary masks.
    const double d = on == 0.0 ? 1.0 : 1.0 - std::sqrt(on / static_cast<double>(mask.size()));
    return std::exp(-(d * d) / (width * width));
}

Explanation fit_surrogate(const PerturbationBatch& batch, std::span<const double> preds, std::size_t classes,
                          std::span<const double> weights, int target, double ridge) {
    const std::size_t n = batch.rows, k = batch.num_segments;
    if (classes == 0 || preds.size() != n * classes)
        throw DimensionError("fit_surrogate: predictions must be " + std::to_string(n) + " x classes");
    if (weights.size() != n) throw DimensionError("fit_surrogate: one kernel weight per row required");
    if (target < 0 || static_cast<std::size_t>(target) >= classes) throw ArgumentError("fit_surrogate: bad target class");
    if (!(ridge >= 0.0)) throw ArgumentError("fit_surrogate: ridge must be non-negative");

    // Normal equations over [1, m]: (A^T W A + ridge * D) beta = A^T W f, D = diag(0, 1, ..., 1).
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(k + 1));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k + 1));
    Eigen::VectorXd a(static_cast<Eigen::Index>(k + 1));
    double wsum = 0.0, wf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = batch.mask(i);
        a(0) = 1.0;
        for (std::size_t j = 0; j < k; ++j) a(static_cast<Eigen::Index>(j + 1)) = m[j];
        const double w = weights[i], f = preds[i * classes + static_cast<std::size_t>(target)];
        G.selfadjointView<Eigen::Lower>().rankUpdate(a, w);
        rhs += (w * f) * a;
        wsum += w;
        wf += w * f;
    }
    G = G.selfadjointView<Eigen::Lower>();
    for (std::size_t j = 1; j <= k; ++j) G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += ridge;

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    // LDLT's rcond estimate can miss an exactly zero pivot, so the pivots are checked too.
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-13 ||
        pivots.minCoeff() <= 1e-13 * pivots.maxCoeff())
        throw NumericalError("fit_surrogate: normal equations are singular; use a ridge penalty > 0");
    const Eigen::VectorXd beta = ldlt.solve(rhs);

    Explanation e;
    e.class_id = target;
    e.intercept = beta(0);
    e.segment_weights.assign(beta.data() + 1, beta.data() + 1 + k);
    e.num_samples = n;

    const double fbar = wsum > 0.0 ? wf / wsum : 0.0;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = batch.mask(i);
        double fit = beta(0);
        for (std::size_t j = 0; j < k; ++j) fit += beta(static_cast<Eigen::Index>(j + 1)) * m[j];
        const double f = preds[i * classes + static_cast<std::size_t>(target)];
        ss_res += weights[i] * (f - fit) * (f - fit);
        ss_tot += weights[i] * (f - fbar) * (f - fbar);
    }
    e.fidelity_r2 = ss_tot > 0.0 ? std::min(1.0, 1.0 - ss_res / ss_tot) : 1.0;
    return e;
}

std::vector<Explanation> explain_classes(const GrayImage& img, const ImageClassifier& model,
                                         std::span<const int> targets, const LimeParams& params) {
    const SuperpixelMap seg = segment(img, params.grid);
    const PerturbationBatch batch = sample_perturbations(params.num_samples, seg.num_segments, params.seed);

    std::vector<double> preds, weights(batch.rows);
    std::size_t classes = 0;
    for (std::size_t i = 0; i < batch.rows; ++i) {
        const auto scores = model(apply_mask(img, seg, batch.mask(i), params.fill));
        if (i == 0) classes = scores.size();
        if (scores.size() != classes || classes == 0)
            throw DimensionError("explain: classifier returned inconsistent score vectors");
        preds.insert(preds.end(), scores.begin(), scores.end());
        weights[i] = kernel_weight(batch.mask(i), params.kernel_width);
    }

    std::vector<Explanation> out;
    for (int t : targets) {
        Explanation e = fit_surrogate(batch, preds, classes, weights, t, params.ridge);
        e.kernel_width = params.kernel_width;
        out.push_back(std::move(e));
    }
    return out;
}

Explanation explain_instance(const GrayImage& img, const ImageClassifier& model, int target,
                             const LimeParams& params) {
    const int t[] = {target};
    return std::move(explain_classes(img, model, t, params).front());
}

std::vector<std::size_t> top_segments(const Explanation& e, std::size_t top_k) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < e.segment_weights.size(); ++i)
        if (e.segment_weights[i] != 0.0) ids.push_back(i);
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(e.segment_weights[a]) > std::abs(e.segment_weights[b]);
    });
    if (ids.size() > top_k) ids.resize(top_k);
    return ids;
}

RgbImage render_overlay(const GrayImage& img, const SuperpixelMap& seg, const Explanation& e, std::size_t top_k) {
    if (top_k < 1) throw ArgumentError("render_overlay: top_k must be >= 1");
    if (e.segment_weights.size() != seg.num_segments)
        throw DimensionError("render_overlay: explanation does not match the superpixel map");
    if (seg.width != img.width() || seg.height != img.height())
        throw DimensionError("render_overlay: superpixel map does not match image dimensions");

    // tint[s]: 0 none, 1 green, 2 red
    std::vector<std::uint8_t> tint(seg.num_segments, 0);
    for (std::size_t s : top_segments(e, top_k)) tint[s] = e.segment_weights[s] > 0.0 ? 1 : 2;

    RgbImage out = RgbImage::from_gray(img);
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x) {
            const auto t = tint[seg.at(x, y)];
            if (t == 0) continue;
            auto px = out.at(x, y);
            const double g = px[0];
            const double color[3] = {t == 2 ? 255.0 : 0.0, t == 1 ? 255.0 : 0.0, 0.0};
            for (int c = 0; c < 3; ++c) px[c] = (1.0 - kOverlayAlpha) * g + kOverlayAlpha * color[c];
        }
    return out;
}

}  // namespace cxr::explain
