#include "cxr/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr::svm {

namespace {

constexpr double kSupportThreshold = 1e-8;
// Smallest multiplier step still counted as progress.
constexpr double kMinStep = 1e-12;

bool is_free(double a, double C) { return a > kSupportThreshold && a < C - kSupportThreshold; }

// Bias from the KKT conditions given fixed multipliers; g[i] = sum_j a_j y_j K_ij.
double settle_bias(std::span<const double> y, std::span<const double> alpha, std::span<const double> g, double C) {
    double free_sum = 0.0;
    std::size_t free_n = 0;
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double target = y[i] - g[i];  // bias putting example i exactly on the margin
        if (is_free(alpha[i], C)) {
            free_sum += target;
            ++free_n;
        } else if ((alpha[i] <= kSupportThreshold) == (y[i] > 0)) {
            lo = std::max(lo, target);  // need y f >= 1
        } else {
            hi = std::min(hi, target);  // need y f <= 1
        }
    }
    if (free_n > 0) return free_sum / static_cast<double>(free_n);
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(hi)) return hi;
    return 0.0;
}

}  // namespace

double KernelSpec::operator()(std::span<const double> a, std::span<const double> b) const {
    double acc = 0.0;
    if (type == Type::Linear) {
        for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
        return acc;
    }
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        acc += d * d;
    }
    return std::exp(-gamma * acc);
}

KernelMatrix::KernelMatrix(const features::FeatureMatrix& X, const KernelSpec& kernel) : n_(X.rows), k_(X.rows * X.rows) {
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i; j < n_; ++j) k_[i * n_ + j] = k_[j * n_ + i] = kernel(X.row(i), X.row(j));
}

double kkt_residual(const KernelMatrix& K, std::span<const double> y, std::span<const double> alpha, double bias,
                    double C) {
    double worst = 0.0;
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        double f = bias;
        for (std::size_t j = 0; j < n; ++j) f += alpha[j] * y[j] * K(i, j);
        const double r = y[i] * f - 1.0;
        if (alpha[i] < C - kSupportThreshold && r < 0.0) worst = std::max(worst, -r);
        if (alpha[i] > kSupportThreshold && r > 0.0) worst = std::max(worst, r);
    }
    return worst;
}

BinarySolution solve_binary_smo(const KernelMatrix& K, std::span<const double> y, const SvmParams& params) {
    const std::size_t n = y.size();
    if (K.size() != n) throw DimensionError("solve_binary_smo: kernel/label size mismatch");
    if (!(params.C > 0.0)) throw ArgumentError("SVM: C must be positive");
    const double C = params.C, tol = params.tol;

    BinarySolution sol;
    sol.alpha.assign(n, 0.0);
    double b = 0.0;
    // err[i] = f(x_i) - y_i with f(x) = sum_j a_j y_j K(x_j, x) + b.
    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i) err[i] = -y[i];
    auto& a = sol.alpha;
    Rng rng(params.seed);

    auto violates = [&](std::size_t i) {
        const double r = y[i] * err[i];
        return (r < -tol && a[i] < C) || (r > tol && a[i] > 0.0);
    };

    std::size_t idle = 0;
    while (idle < params.max_passes && sol.passes < params.max_total_passes && n > 1) {
        bool any_violation = false;
        for (std::size_t i = 0; i < n && !any_violation; ++i) any_violation = violates(i);
        if (!any_violation) break;
        ++sol.passes;

        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!violates(i)) continue;
            std::size_t j = static_cast<std::size_t>(rng.uniform_index(n - 1));
            if (j >= i) ++j;

            const double ai_old = a[i], aj_old = a[j];
            double L, H;
            if (y[i] != y[j]) {
                L = std::max(0.0, aj_old - ai_old);
                H = std::min(C, C + aj_old - ai_old);
            } else {
                L = std::max(0.0, ai_old + aj_old - C);
                H = std::min(C, ai_old + aj_old);
            }
            if (L >= H) continue;
            const double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
            if (eta >= 0.0) continue;

            double aj = aj_old - y[j] * (err[i] - err[j]) / eta;
            aj = std::clamp(aj, L, H);
            if (std::abs(aj - aj_old) < kMinStep) continue;
            // The box bounds imply ai is in [0, C]; clamping removes round-off drift.
            const double ai = std::clamp(ai_old + y[i] * y[j] * (aj_old - aj), 0.0, C);

            const double di = y[i] * (ai - ai_old), dj = y[j] * (aj - aj_old);
            const double b1 = b - err[i] - di * K(i, i) - dj * K(i, j);
            const double b2 = b - err[j] - di * K(i, j) - dj * K(j, j);
            double b_new;
            if (ai > 0.0 && ai < C)
                b_new = b1;
            else if (aj > 0.0 && aj < C)
                b_new = b2;
            else
                b_new = 0.5 * (b1 + b2);

            a[i] = ai;
            a[j] = aj;
            const double db = b_new - b;
            b = b_new;
            for (std::size_t k = 0; k < n; ++k) err[k] += di * K(i, k) + dj * K(j, k) + db;
            ++changed;
        }
        idle = changed == 0 ? idle + 1 : 0;
    }

    // Recompute the bias from exact margins rather than the running update.
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i] += a[j] * y[j] * K(i, j);
    sol.bias = settle_bias(y, a, g, C);
    sol.kkt_residual = kkt_residual(K, y, a, sol.bias, C);
    return sol;
}

double BinaryMachine::decision(std::span<const double> x, const KernelSpec& kernel) const {
    const std::size_t dim = coefficients.empty() ? 0 : support.size() / coefficients.size();
    double f = bias;
    for (std::size_t s = 0; s < coefficients.size(); ++s)
        f += coefficients[s] * kernel(std::span<const double>(support.data() + s * dim, dim), x);
    return f;
}

std::vector<double> SvmModel::decision_values(std::span<const double> x) const {
    if (x.size() != dim)
        throw DimensionError("SVM: input has " + std::to_string(x.size()) + " features, model expects " +
                             std::to_string(dim));
    std::vector<double> out(machines.size());
    for (std::size_t c = 0; c < machines.size(); ++c) out[c] = machines[c].decision(x, kernel);
    return out;
}

SvmModel train_svm(const features::FeatureMatrix& X, const std::vector<int>& y, const SvmParams& params,
                   std::size_t n_classes) {
    if (!(params.C > 0.0) || !std::isfinite(params.C)) throw ArgumentError("SVM: C must be positive");
    if (X.rows != y.size()) throw DimensionError("SVM: row/label count mismatch");
    for (double v : X.values)
        if (!std::isfinite(v)) throw ArgumentError("SVM: non-finite feature value");
    const std::set<int> present(y.begin(), y.end());
    if (present.size() < 2) throw DataError("SVM: training data must contain at least 2 classes");
    if (*present.begin() < 0) throw ArgumentError("SVM: negative class label");
    if (n_classes == 0) n_classes = static_cast<std::size_t>(*present.rbegin()) + 1;
    if (static_cast<std::size_t>(*present.rbegin()) >= n_classes) throw ArgumentError("SVM: label out of range");

    SvmModel model;
    model.dim = X.dim;
    model.n_classes = n_classes;
    model.C = params.C;
    model.kernel = params.kernel;
    if (model.kernel.type == KernelSpec::Type::Rbf && model.kernel.gamma <= 0.0)
        model.kernel.gamma = 1.0 / static_cast<double>(std::max<std::size_t>(X.dim, 1));
    model.descriptor_id = X.descriptor_id;

    const KernelMatrix K(X, model.kernel);
    std::vector<double> yb(y.size());
    for (std::size_t c = 0; c < n_classes; ++c) {
        BinaryMachine m;
        m.positive_class = static_cast<int>(c);
        if (!present.contains(static_cast<int>(c))) {
            m.bias = -1.0;  // class absent from training: never preferred
            model.machines.push_back(std::move(m));
            continue;
        }
        for (std::size_t i = 0; i < y.size(); ++i) yb[i] = y[i] == static_cast<int>(c) ? 1.0 : -1.0;
        SvmParams p = params;
        p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(c));
        const BinarySolution sol = solve_binary_smo(K, yb, p);
        m.bias = sol.bias;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (sol.alpha[i] <= kSupportThreshold) continue;
            const auto row = X.row(i);
            m.support.insert(m.support.end(), row.begin(), row.end());
            m.coefficients.push_back(sol.alpha[i] * yb[i]);
        }
        model.machines.push_back(std::move(m));
    }
    return model;
}

Prediction predict_svm(const SvmModel& model, std::span<const double> x) {
    return make_prediction(softmax(model.decision_values(x)));
}

}  // namespace cxr::svm
