#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cxr/features.hpp"
#include "cxr/prediction.hpp"

namespace cxr::cnn {

enum class Padding { Valid, Same };

/// Three conv(3x3) + ReLU + maxpool(2x2, stride 2) blocks, flatten,
/// dense + ReLU, dense + softmax. Single-channel square input.
struct CnnConfig {
    std::size_t input_side = 64;
    std::size_t n_classes = 4;
    std::array<std::size_t, 3> channels = {8, 16, 32};
    std::size_t hidden = 64;
    Padding padding = Padding::Valid;
    double learning_rate = 0.01;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    bool operator==(const CnnConfig&) const = default;
};

struct LayerShapes {
    std::array<std::size_t, 3> conv_side{};  // spatial side after each convolution
    std::array<std::size_t, 3> pool_side{};  // after each pooling
    std::size_t flatten = 0;
};

/// Throws ArgumentError naming the offending layer when the input is too small.
LayerShapes layer_shapes(const CnnConfig& config);

/// All trainable tensors. Conv weights are laid out [out][in][ky][kx];
/// dense weights are [out][in].
struct CnnWeights {
    std::array<std::vector<double>, 3> conv_w;
    std::array<std::vector<double>, 3> conv_b;
    std::vector<double> hidden_w, hidden_b;
    std::vector<double> out_w, out_b;

    /// Zero tensors shaped for the configuration.
    static CnnWeights zeros(const CnnConfig& config);
    /// Every tensor in a fixed order (conv1 w, conv1 b, ..., out w, out b).
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
    std::size_t parameter_count() const;

    bool operator==(const CnnWeights&) const = default;
};

struct CnnModel {
    CnnConfig config;
    CnnWeights weights;
    std::vector<double> loss_history;  // mean training cross-entropy per epoch
    std::string descriptor_id;

    /// He-uniform weights U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), zero biases,
    /// drawn from the config seed.
    static CnnModel initialize(const CnnConfig& config);
};

Prediction cnn_forward(const CnnModel& model, const features::PixelTensor& input);
Prediction cnn_forward(const CnnModel& model, std::span<const double> pixels);

/// Mean cross-entropy over the selected rows of X, with the gradient of that
/// mean written into `grad` (which is reset first).
double loss_and_gradient(const CnnModel& model, const features::FeatureMatrix& X, const std::vector<int>& y,
                         std::span<const std::size_t> rows, CnnWeights& grad);

/// Mini-batch SGD on mean cross-entropy. Rows are reshuffled every epoch from
/// a stream derived from the config seed.
CnnModel cnn_train(const features::FeatureMatrix& X, const std::vector<int>& y, const CnnConfig& config);

/// Continues training from an existing model with the model's own config.
CnnModel cnn_train(CnnModel model, const features::FeatureMatrix& X, const std::vector<int>& y);

}  // namespace cxr::cnn
