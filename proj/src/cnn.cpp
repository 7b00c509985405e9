#include "cxr/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr::cnn {

namespace {

struct ConvBlockCache {
    std::vector<double> input;  // [c_in][side][side]
    std::vector<double> activ;  // post-ReLU conv output
    std::vector<std::size_t> argmax;  // pooled position -> index into activ
};

struct ForwardCache {
    std::array<ConvBlockCache, 3> blocks;
    std::vector<double> flat;
    std::vector<double> hidden_pre;
    std::vector<double> hidden;
    std::vector<double> probs;
};

std::size_t pad_of(Padding p) { return p == Padding::Same ? 1 : 0; }

std::size_t in_channels(const CnnConfig& c, std::size_t block) { return block == 0 ? 1 : c.channels[block - 1]; }

// 3x3 correlation, zero padding `pad`, followed by ReLU.
void conv_relu(std::span<const double> in, std::size_t c_in, std::size_t side, std::span<const double> w,
               std::span<const double> b, std::size_t c_out, std::size_t pad, std::size_t out_side,
               std::vector<double>& out) {
    out.assign(c_out * out_side * out_side, 0.0);
    const auto s = static_cast<std::ptrdiff_t>(side);
    for (std::size_t o = 0; o < c_out; ++o) {
        double* dst = out.data() + o * out_side * out_side;
        for (std::size_t i = 0; i < out_side * out_side; ++i) dst[i] = b[o];
        for (std::size_t c = 0; c < c_in; ++c) {
            const double* src = in.data() + c * side * side;
            const double* k = w.data() + (o * c_in + c) * 9;
            for (std::size_t y = 0; y < out_side; ++y)
                for (std::size_t x = 0; x < out_side; ++x) {
                    double acc = 0.0;
                    for (std::size_t ky = 0; ky < 3; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || iy >= s) continue;
                        for (std::size_t kx = 0; kx < 3; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(pad);
                            if (ix < 0 || ix >= s) continue;
                            acc += k[ky * 3 + kx] * src[iy * s + ix];
                        }
                    }
                    dst[y * out_side + x] += acc;
                }
        }
        for (std::size_t i = 0; i < out_side * out_side; ++i) dst[i] = std::max(dst[i], 0.0);
    }
}

void max_pool(std::span<const double> in, std::size_t channels, std::size_t side, std::size_t out_side,
              std::vector<double>& out, std::vector<std::size_t>& argmax) {
    out.assign(channels * out_side * out_side, 0.0);
    argmax.assign(out.size(), 0);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t py = 0; py < out_side; ++py)
            for (std::size_t px = 0; px < out_side; ++px) {
                std::size_t best = c * side * side + (2 * py) * side + 2 * px;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = c * side * side + (2 * py + dy) * side + (2 * px + dx);
                        if (in[idx] > in[best]) best = idx;
                    }
                const std::size_t o = c * out_side * out_side + py * out_side + px;
                out[o] = in[best];
                argmax[o] = best;
            }
}

void dense(std::span<const double> in, std::span<const double> w, std::span<const double> b, std::size_t n_out,
           std::vector<double>& out) {
    const std::size_t n_in = in.size();
    out.resize(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
        double acc = b[o];
        const double* row = w.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

void check_input(const CnnModel& model, std::span<const double> pixels) {
    const std::size_t side = model.config.input_side;
    if (pixels.size() != side * side)
        throw DimensionError("cnn: expected input of shape " + std::to_string(side) + "x" + std::to_string(side) +
                             " (" + std::to_string(side * side) + " values), got " + std::to_string(pixels.size()) +
                             " values");
}

void forward(const CnnModel& model, const LayerShapes& shapes, std::span<const double> pixels, ForwardCache& cache) {
    const auto& cfg = model.config;
    const auto& W = model.weights;
    const std::size_t pad = pad_of(cfg.padding);
    std::vector<double> current(pixels.begin(), pixels.end());
    std::size_t side = cfg.input_side;
    for (std::size_t k = 0; k < 3; ++k) {
        auto& blk = cache.blocks[k];
        blk.input = std::move(current);
        conv_relu(blk.input, in_channels(cfg, k), side, W.conv_w[k], W.conv_b[k], cfg.channels[k], pad,
                  shapes.conv_side[k], blk.activ);
        max_pool(blk.activ, cfg.channels[k], shapes.conv_side[k], shapes.pool_side[k], current, blk.argmax);
        side = shapes.pool_side[k];
    }
    cache.flat = std::move(current);
    dense(cache.flat, W.hidden_w, W.hidden_b, cfg.hidden, cache.hidden_pre);
    cache.hidden.resize(cfg.hidden);
    for (std::size_t i = 0; i < cfg.hidden; ++i) cache.hidden[i] = std::max(cache.hidden_pre[i], 0.0);
    std::vector<double> logits;
    dense(cache.hidden, W.out_w, W.out_b, cfg.n_classes, logits);
    cache.probs = softmax(logits);
}

// Accumulates the gradient of -log p[label] into grad.
void backward(const CnnModel& model, const LayerShapes& shapes, const ForwardCache& cache, int label,
              CnnWeights& grad) {
    const auto& cfg = model.config;
    const auto& W = model.weights;
    const std::size_t pad = pad_of(cfg.padding);
    const std::size_t H = cfg.hidden, K = cfg.n_classes, F = cache.flat.size();

    std::vector<double> dlogits = cache.probs;
    dlogits[static_cast<std::size_t>(label)] -= 1.0;

    std::vector<double> dhidden(H, 0.0);
    for (std::size_t o = 0; o < K; ++o) {
        grad.out_b[o] += dlogits[o];
        for (std::size_t i = 0; i < H; ++i) {
            grad.out_w[o * H + i] += dlogits[o] * cache.hidden[i];
            dhidden[i] += W.out_w[o * H + i] * dlogits[o];
        }
    }
    for (std::size_t i = 0; i < H; ++i)
        if (!(cache.hidden_pre[i] > 0.0)) dhidden[i] = 0.0;

    std::vector<double> dnext(F, 0.0);  // gradient w.r.t. the current block's pooled output
    for (std::size_t o = 0; o < H; ++o) {
        grad.hidden_b[o] += dhidden[o];
        if (dhidden[o] == 0.0) continue;
        const double* row = W.hidden_w.data() + o * F;
        double* grow = grad.hidden_w.data() + o * F;
        for (std::size_t i = 0; i < F; ++i) {
            grow[i] += dhidden[o] * cache.flat[i];
            dnext[i] += row[i] * dhidden[o];
        }
    }

    for (std::size_t kk = 3; kk-- > 0;) {
        const auto& blk = cache.blocks[kk];
        const std::size_t c_in = in_channels(cfg, kk), c_out = cfg.channels[kk];
        const std::size_t side = kk == 0 ? cfg.input_side : shapes.pool_side[kk - 1];
        const std::size_t os = shapes.conv_side[kk];
        const auto s = static_cast<std::ptrdiff_t>(side);

        std::vector<double> dact(blk.activ.size(), 0.0);
        for (std::size_t p = 0; p < blk.argmax.size(); ++p) dact[blk.argmax[p]] += dnext[p];
        for (std::size_t i = 0; i < dact.size(); ++i)
            if (!(blk.activ[i] > 0.0)) dact[i] = 0.0;

        std::vector<double> din(kk > 0 ? c_in * side * side : 0, 0.0);
        for (std::size_t o = 0; o < c_out; ++o) {
            const double* d = dact.data() + o * os * os;
            double bsum = 0.0;
            for (std::size_t i = 0; i < os * os; ++i) bsum += d[i];
            grad.conv_b[kk][o] += bsum;
            for (std::size_t c = 0; c < c_in; ++c) {
                const double* src = blk.input.data() + c * side * side;
                const double* k = W.conv_w[kk].data() + (o * c_in + c) * 9;
                double* gk = grad.conv_w[kk].data() + (o * c_in + c) * 9;
                double* dsrc = kk > 0 ? din.data() + c * side * side : nullptr;
                for (std::size_t y = 0; y < os; ++y)
                    for (std::size_t x = 0; x < os; ++x) {
                        const double g = d[y * os + x];
                        if (g == 0.0) continue;
                        for (std::size_t ky = 0; ky < 3; ++ky) {
                            const auto iy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
                            if (iy < 0 || iy >= s) continue;
                            for (std::size_t kx = 0; kx < 3; ++kx) {
                                const auto ix = static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(pad);
                                if (ix < 0 || ix >= s) continue;
                                gk[ky * 3 + kx] += g * src[iy * s + ix];
                                if (dsrc) dsrc[iy * s + ix] += g * k[ky * 3 + kx];
                            }
                        }
                    }
            }
        }
        dnext = std::move(din);
    }
}

void scale(CnnWeights& w, double f) {
    for (auto t : w.tensors())
        for (double& v : t) v *= f;
}

void validate_training(const CnnConfig& cfg, const features::FeatureMatrix& X, const std::vector<int>& y) {
    if (X.rows == 0) throw DataError("cnn: no training rows");
    if (X.rows != y.size()) throw DimensionError("cnn: row/label count mismatch");
    if (X.dim != cfg.input_side * cfg.input_side)
        throw DimensionError("cnn: feature rows have " + std::to_string(X.dim) + " values, expected " +
                             std::to_string(cfg.input_side) + "x" + std::to_string(cfg.input_side));
    for (int l : y)
        if (l < 0 || static_cast<std::size_t>(l) >= cfg.n_classes)
            throw ArgumentError("cnn: label " + std::to_string(l) + " out of range");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw ArgumentError("cnn: learning rate must be non-negative");
    if (cfg.batch_size == 0) throw ArgumentError("cnn: batch size must be >= 1");
}

}  // namespace

LayerShapes layer_shapes(const CnnConfig& config) {
    if (config.n_classes < 2) throw ArgumentError("cnn: need at least 2 classes");
    if (config.hidden == 0) throw ArgumentError("cnn: hidden width must be >= 1");
    for (std::size_t c : config.channels)
        if (c == 0) throw ArgumentError("cnn: channel counts must be >= 1");
    LayerShapes s;
    std::size_t side = config.input_side;
    const std::size_t grow = 2 * pad_of(config.padding);
    for (std::size_t k = 0; k < 3; ++k) {
        if (side + grow < 3)
            throw ArgumentError("cnn: input side " + std::to_string(config.input_side) + " too small: conv" +
                                std::to_string(k + 1) + " receives " + std::to_string(side) + "x" +
                                std::to_string(side));
        s.conv_side[k] = side + grow - 2;
        s.pool_side[k] = s.conv_side[k] / 2;
        if (s.pool_side[k] == 0)
            throw ArgumentError("cnn: input side " + std::to_string(config.input_side) + " too small: pool" +
                                std::to_string(k + 1) + " receives " + std::to_string(s.conv_side[k]) + "x" +
                                std::to_string(s.conv_side[k]));
        side = s.pool_side[k];
    }
    s.flatten = side * side * config.channels[2];
    return s;
}

CnnWeights CnnWeights::zeros(const CnnConfig& config) {
    const LayerShapes s = layer_shapes(config);
    CnnWeights w;
    for (std::size_t k = 0; k < 3; ++k) {
        w.conv_w[k].assign(config.channels[k] * in_channels(config, k) * 9, 0.0);
        w.conv_b[k].assign(config.channels[k], 0.0);
    }
    w.hidden_w.assign(config.hidden * s.flatten, 0.0);
    w.hidden_b.assign(config.hidden, 0.0);
    w.out_w.assign(config.n_classes * config.hidden, 0.0);
    w.out_b.assign(config.n_classes, 0.0);
    return w;
}

std::vector<std::span<double>> CnnWeights::tensors() {
    return {conv_w[0], conv_b[0], conv_w[1], conv_b[1], conv_w[2], conv_b[2], hidden_w, hidden_b, out_w, out_b};
}

std::vector<std::span<const double>> CnnWeights::tensors() const {
    return {conv_w[0], conv_b[0], conv_w[1], conv_b[1], conv_w[2], conv_b[2], hidden_w, hidden_b, out_w, out_b};
}

std::size_t CnnWeights::parameter_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
}

CnnModel CnnModel::initialize(const CnnConfig& config) {
    CnnModel m;
    m.config = config;
    m.weights = CnnWeights::zeros(config);
    m.descriptor_id = "pixels" + std::to_string(config.input_side);
    Rng rng(config.seed);
    auto fill = [&](std::vector<double>& w, std::size_t fan_in) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& v : w) v = (2.0 * rng.uniform01() - 1.0) * limit;
    };
    for (std::size_t k = 0; k < 3; ++k) fill(m.weights.conv_w[k], in_channels(config, k) * 9);
    fill(m.weights.hidden_w, layer_shapes(config).flatten);
    fill(m.weights.out_w, config.hidden);
    return m;
}

Prediction cnn_forward(const CnnModel& model, std::span<const double> pixels) {
    check_input(model, pixels);
    const LayerShapes shapes = layer_shapes(model.config);
    ForwardCache cache;
    forward(model, shapes, pixels, cache);
    return make_prediction(std::move(cache.probs));
}

Prediction cnn_forward(const CnnModel& model, const features::PixelTensor& input) {
    if (input.side != model.config.input_side)
        throw DimensionError("cnn: expected input of shape " + std::to_string(model.config.input_side) + "x" +
                             std::to_string(model.config.input_side) + ", got " + std::to_string(input.side) + "x" +
                             std::to_string(input.side));
    return cnn_forward(model, std::span<const double>(input.values));
}

double loss_and_gradient(const CnnModel& model, const features::FeatureMatrix& X, const std::vector<int>& y,
                         std::span<const std::size_t> rows, CnnWeights& grad) {
    if (rows.empty()) throw ArgumentError("cnn: empty batch");
    const LayerShapes shapes = layer_shapes(model.config);
    grad = CnnWeights::zeros(model.config);
    ForwardCache cache;
    double loss = 0.0;
    for (std::size_t r : rows) {
        const auto x = X.row(r);
        check_input(model, x);
        forward(model, shapes, x, cache);
        const double p = cache.probs[static_cast<std::size_t>(y[r])];
        loss -= std::log(std::max(p, 1e-300));
        backward(model, shapes, cache, y[r], grad);
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    scale(grad, inv);
    return loss * inv;
}

CnnModel cnn_train(const features::FeatureMatrix& X, const std::vector<int>& y, const CnnConfig& config) {
    return cnn_train(CnnModel::initialize(config), X, y);
}

CnnModel cnn_train(CnnModel model, const features::FeatureMatrix& X, const std::vector<int>& y) {
    const CnnConfig& cfg = model.config;
    validate_training(cfg, X, y);
    Rng rng(derive_seed(cfg.seed, std::string_view("cnn-shuffle")));
    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), 0);
    CnnWeights grad;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            const double loss = loss_and_gradient(model, X, y, rows, grad);
            if (!std::isfinite(loss))
                throw NumericalError("cnn: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(batch + 1));
            epoch_loss += loss * static_cast<double>(rows.size());
            auto params = model.weights.tensors();
            const auto grads = grad.tensors();
            for (std::size_t t = 0; t < params.size(); ++t)
                for (std::size_t j = 0; j < params[t].size(); ++j) params[t][j] -= cfg.learning_rate * grads[t][j];
        }
        model.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return model;
}

}  // namespace cxr::cnn
