#pragma once

// Independent reference implementations used to check the library. They are
// written for clarity, not speed, and share no code with src/.

#include <cstdint>
#include <span>
#include <vector>

#include "cxr/cnn.hpp"
#include "cxr/features.hpp"
#include "cxr/image.hpp"

namespace cxr::oracle {

/// Correlation with replicate padding, four nested loops and explicit index clamping.
std::vector<double> convolve(const GrayImage& img, const Kernel3x3& k);

/// Straight-line enhancement: neighbour sums for L and S, Sobel sums,
/// M = (G / max G) * (S - L), F = L + M, clamp, 255 (F / 255)^gamma.
std::vector<double> enhance(const GrayImage& img, double gamma);

/// HOG with per-pixel votes computed as triangular weights against every bin
/// centre (circular distance), followed by textbook L2-Hys.
std::vector<double> hog(const GrayImage& img, const features::HogParams& params);

struct DualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
};

/// Projected-gradient solve of the binary SVM dual
///   min 1/2 a^T Q a - 1^T a,  Q_ij = y_i y_j K_ij,  0 <= a <= C,  y^T a = 0,
/// with the projection found by bisection on the hyperplane multiplier.
DualSolution svm_dual(const std::vector<double>& K, const std::vector<double>& y, double C,
                      std::size_t max_iterations = 2'000'000, double tol = 1e-14);

/// Weighted ridge via Householder QR of the stacked system
/// [sqrt(w) * [1, m]; sqrt(ridge) * [0, I]] beta = [sqrt(w) * f; 0].
/// masks is n x k row-major. Returns [intercept, b_1..b_k].
std::vector<double> weighted_ridge_qr(std::span<const std::uint8_t> masks, std::size_t n, std::size_t k,
                                      std::span<const double> f, std::span<const double> w, double ridge);

struct DirectMetrics {
    double accuracy = 0.0;
    std::vector<double> precision, recall, f1;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};

/// Metrics straight from the definitions over a row-major confusion matrix.
DirectMetrics metrics_from_counts(const std::vector<std::uint64_t>& counts, std::size_t classes);

/// Central finite differences of the mean cross-entropy, computed from the
/// forward pass only: loss = -mean log softmax_y.
cnn::CnnWeights finite_difference_gradient(const cnn::CnnModel& model, const features::FeatureMatrix& X,
                                           const std::vector<int>& y, std::span<const std::size_t> rows, double h);

/// Largest |a - n| / max(|a|, |n|, floor) over every parameter.
double max_relative_error(const cnn::CnnWeights& analytic, const cnn::CnnWeights& numeric, double floor);

}  // namespace cxr::oracle
