#include "cxr/metrics.hpp"

#include <numeric>
#include <string>

#include "cxr/errors.hpp"

namespace cxr::metrics {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred, std::size_t classes) {
    if (y_true.size() != y_pred.size())
        throw DimensionError("confusion: " + std::to_string(y_true.size()) + " true labels vs " +
                             std::to_string(y_pred.size()) + " predictions");
    if (y_true.empty()) throw ArgumentError("confusion: no samples");
    if (classes == 0) throw ArgumentError("confusion: class count must be >= 1");
    ConfusionMatrix cm{classes, std::vector<std::uint64_t>(classes * classes, 0)};
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes)
            throw ArgumentError("confusion: label out of range at index " + std::to_string(i));
        ++cm.counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
    }
    return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes;
    if (cm.counts.size() != k * k) throw DimensionError("report: malformed confusion matrix");
    const std::uint64_t total = cm.total();
    if (total == 0) throw ArgumentError("report: confusion matrix is empty");

    MetricsReport r;
    r.precision.assign(k, 0.0);
    r.recall.assign(k, 0.0);
    r.f1.assign(k, 0.0);
    r.support.assign(k, 0);
    r.zero_denominator.assign(k, false);

    std::uint64_t diag = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t row = 0, col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        const auto tp = static_cast<double>(cm.at(c, c));
        diag += cm.at(c, c);
        r.support[c] = row;
        if (col == 0 || row == 0) r.zero_denominator[c] = true;
        r.precision[c] = col > 0 ? tp / static_cast<double>(col) : 0.0;
        r.recall[c] = row > 0 ? tp / static_cast<double>(row) : 0.0;
        const double ps = r.precision[c] + r.recall[c];
        r.f1[c] = ps > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / ps : 0.0;
    }
    r.accuracy = static_cast<double>(diag) / static_cast<double>(total);
    const double kd = static_cast<double>(k);
    r.macro_precision = std::accumulate(r.precision.begin(), r.precision.end(), 0.0) / kd;
    r.macro_recall = std::accumulate(r.recall.begin(), r.recall.end(), 0.0) / kd;
    r.macro_f1 = std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / kd;
    return r;
}

}  // namespace cxr::metrics
