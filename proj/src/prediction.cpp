#include "cxr/prediction.hpp"

#include <algorithm>
#include <cmath>

#include "cxr/errors.hpp"

namespace cxr {

int argmax(std::span<const double> scores) {
    if (scores.empty()) throw ArgumentError("argmax of an empty score vector");
    int best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw ArgumentError("softmax of an empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

Prediction make_prediction(std::vector<double> scores) {
    Prediction p;
    p.label = argmax(scores);
    p.scores = std::move(scores);
    return p;
}

}  // namespace cxr
