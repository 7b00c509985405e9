#pragma once

#include <span>
#include <vector>

namespace cxr {

/// Uniform classifier output: a probability vector and its argmax.
struct Prediction {
    int label = 0;
    std::vector<double> scores;
};

/// Index of the largest score; ties go to the lowest index.
int argmax(std::span<const double> scores);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Builds a Prediction from a probability vector.
Prediction make_prediction(std::vector<double> scores);

}  // namespace cxr
