#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cxr/features.hpp"
#include "cxr/prediction.hpp"

namespace cxr::svm {

struct KernelSpec {
    enum class Type { Linear, Rbf };
    Type type = Type::Rbf;
    /// RBF: K(a, b) = exp(-gamma * |a - b|^2). Zero means 1 / dimension at training time.
    double gamma = 0.0;

    double operator()(std::span<const double> a, std::span<const double> b) const;
    bool operator==(const KernelSpec&) const = default;
};

struct SvmParams {
    double C = 1.0;
    KernelSpec kernel;
    double tol = 1e-3;
    /// Consecutive passes without any multiplier change before giving up.
    std::size_t max_passes = 200;
    /// Hard cap on the total number of passes.
    std::size_t max_total_passes = 20000;
    std::uint64_t seed = 0;
};

/// Dense kernel matrix over the training rows.
class KernelMatrix {
public:
    KernelMatrix(const features::FeatureMatrix& X, const KernelSpec& kernel);
    double operator()(std::size_t i, std::size_t j) const { return k_[i * n_ + j]; }
    std::size_t size() const { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<double> k_;
};

/// Result of one binary dual solve. Decision function f(x) = sum_i alpha_i y_i K(x_i, x) + bias.
struct BinarySolution {
    std::vector<double> alpha;
    double bias = 0.0;
    std::size_t passes = 0;
    double kkt_residual = 0.0;  // max KKT violation of y_i f(x_i) against the margin
};

/// Simplified SMO: each pass visits every multiplier violating KKT by more than
/// tol and pairs it with a uniformly drawn second index. Stops when no
/// violation exceeds tol, or after max_passes passes with no change. The bias
/// is finally set to the mean over free multipliers (or the midpoint of the
/// feasible interval when none are free).
BinarySolution solve_binary_smo(const KernelMatrix& K, std::span<const double> y, const SvmParams& params);

/// KKT residual of a candidate solution (max violation over all multipliers).
double kkt_residual(const KernelMatrix& K, std::span<const double> y, std::span<const double> alpha, double bias,
                    double C);

struct BinaryMachine {
    int positive_class = 0;
    std::vector<double> support;       // n_sv * dim, row-major
    std::vector<double> coefficients;  // alpha_i * y_i per support vector
    double bias = 0.0;

    std::size_t support_count() const { return coefficients.size(); }
    double decision(std::span<const double> x, const KernelSpec& kernel) const;
};

struct SvmModel {
    std::size_t dim = 0;
    std::size_t n_classes = 0;
    double C = 1.0;
    KernelSpec kernel;  // gamma resolved
    std::vector<BinaryMachine> machines;  // one per class, one-vs-rest
    std::string descriptor_id;

    std::vector<double> decision_values(std::span<const double> x) const;
};

/// One-vs-rest training; labels are class indices in [0, n_classes).
/// Support vectors are rows with alpha > 1e-8.
SvmModel train_svm(const features::FeatureMatrix& X, const std::vector<int>& y, const SvmParams& params,
                   std::size_t n_classes = 0);

/// Softmax over the per-class decision values.
Prediction predict_svm(const SvmModel& model, std::span<const double> x);

}  // namespace cxr::svm
