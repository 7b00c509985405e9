#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cxr::metrics {

/// counts[t][p]: samples of true class t predicted as p.
struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::uint64_t> counts;  // classes * classes, row-major

    std::uint64_t at(std::size_t t, std::size_t p) const { return counts[t * classes + p]; }
    std::uint64_t total() const;
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred, std::size_t classes);

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<double> precision, recall, f1;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    std::vector<std::uint64_t> support;  // true count per class
    /// Classes whose precision or recall had a zero denominator (scored 0).
    std::vector<bool> zero_denominator;
};

/// Per-class precision, recall and F1 with unweighted macro means. Zero
/// denominators score 0 and set zero_denominator for that class.
MetricsReport report(const ConfusionMatrix& cm);

}  // namespace cxr::metrics
