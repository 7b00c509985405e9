#include "cxr/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "cxr/errors.hpp"
#include "cxr/rng.hpp"

namespace cxr::forest {

namespace {

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child Gini
};

class TreeBuilder {
public:
    TreeBuilder(const features::FeatureMatrix& X, const std::vector<int>& y, std::size_t n_classes,
                const ForestParams& params, std::size_t mtry, Rng& rng)
        : X_(X), y_(y), n_classes_(n_classes), params_(params), mtry_(mtry), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> samples) {
        DecisionTree tree;
        grow(tree, samples, 0);
        return tree;
    }

private:
    std::vector<double> count(std::span<const std::size_t> samples) const {
        std::vector<double> c(n_classes_, 0.0);
        for (std::size_t s : samples) c[static_cast<std::size_t>(y_[s])] += 1.0;
        return c;
    }

    SplitChoice best_split_on(std::size_t feature, std::span<const std::size_t> samples) const {
        std::vector<std::pair<double, int>> v;
        v.reserve(samples.size());
        for (std::size_t s : samples) v.emplace_back(X_.row(s)[feature], y_[s]);
        std::sort(v.begin(), v.end());

        const std::size_t n = v.size();
        std::vector<double> left(n_classes_, 0.0), right(n_classes_, 0.0);
        for (const auto& [x, c] : v) right[static_cast<std::size_t>(c)] += 1.0;

        SplitChoice best;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto c = static_cast<std::size_t>(v[i].second);
            left[c] += 1.0;
            right[c] -= 1.0;
            if (v[i].first == v[i + 1].first) continue;
            const std::size_t nl = i + 1, nr = n - nl;
            if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
            const double imp = (static_cast<double>(nl) * gini(left) + static_cast<double>(nr) * gini(right)) /
                               static_cast<double>(n);
            if (!best.found || imp < best.impurity) {
                double thr = 0.5 * (v[i].first + v[i + 1].first);
                if (!(thr < v[i + 1].first)) thr = v[i].first;  // adjacent doubles
                best = {true, feature, thr, imp};
            }
        }
        return best;
    }

    std::int32_t grow(DecisionTree& tree, std::vector<std::size_t>& samples, std::size_t depth) {
        const auto index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.back().counts = count(samples);

        const bool pure = gini(tree.nodes.back().counts) == 0.0;
        const bool depth_reached = params_.max_depth > 0 && depth >= params_.max_depth;
        if (pure || depth_reached || samples.size() < 2 * params_.min_leaf) return index;

        // Lazy Fisher-Yates over feature indices: the first mtry form the
        // candidate subset; later ones are only drawn if the subset cannot split.
        const std::size_t d = X_.dim;
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), 0);
        SplitChoice best;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t pick = k + static_cast<std::size_t>(rng_.uniform_index(d - k));
            std::swap(order[k], order[pick]);
            const SplitChoice s = best_split_on(order[k], samples);
            if (s.found && (!best.found || s.impurity < best.impurity)) best = s;
            if (k + 1 >= mtry_ && best.found) break;
        }
        if (!best.found) return index;

        std::vector<std::size_t> left, right;
        for (std::size_t s : samples) (X_.row(s)[best.feature] <= best.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();

        const std::int32_t l = grow(tree, left, depth + 1);
        const std::int32_t r = grow(tree, right, depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<std::int32_t>(best.feature);
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return index;
    }

    const features::FeatureMatrix& X_;
    const std::vector<int>& y_;
    std::size_t n_classes_;
    const ForestParams& params_;
    std::size_t mtry_;
    Rng& rng_;
};

}  // namespace

double gini(std::span<const double> counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += (c / total) * (c / total);
    return 1.0 - s;
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf())
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                                         ? nodes[i].left
                                         : nodes[i].right);
    return i;
}

std::vector<double> DecisionTree::distribution(std::span<const double> x) const {
    const auto& counts = nodes[leaf_index(x)].counts;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::vector<double> p(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) p[c] = counts[c] / total;
    return p;
}

ForestModel train_forest(const features::FeatureMatrix& X, const std::vector<int>& y, const ForestParams& params,
                         std::size_t n_classes) {
    if (X.rows == 0 || y.empty()) throw DataError("forest: empty training data");
    if (X.rows != y.size()) throw DimensionError("forest: row/label count mismatch");
    if (params.n_trees == 0) throw ArgumentError("forest: n_trees must be >= 1");
    if (params.min_leaf == 0) throw ArgumentError("forest: min_leaf must be >= 1");
    const int max_label = *std::max_element(y.begin(), y.end());
    if (*std::min_element(y.begin(), y.end()) < 0) throw ArgumentError("forest: negative class label");
    if (n_classes == 0) n_classes = static_cast<std::size_t>(max_label) + 1;
    if (static_cast<std::size_t>(max_label) >= n_classes) throw ArgumentError("forest: label out of range");

    ForestModel model;
    model.params = params;
    model.dim = X.dim;
    model.n_classes = n_classes;
    model.descriptor_id = X.descriptor_id;
    model.trees.resize(params.n_trees);

    std::size_t mtry = params.features_per_split;
    if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.dim))));
    mtry = std::clamp<std::size_t>(mtry, 1, std::max<std::size_t>(X.dim, 1));

    auto grow_tree = [&](std::size_t t) {
        Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> samples(X.rows);
        if (params.bootstrap)
            for (auto& s : samples) s = static_cast<std::size_t>(rng.uniform_index(X.rows));
        else
            std::iota(samples.begin(), samples.end(), 0);
        TreeBuilder builder(X, y, n_classes, params, mtry, rng);
        model.trees[t] = builder.build(std::move(samples));
    };

    const std::size_t threads = std::clamp<std::size_t>(params.threads, 1, params.n_trees);
    if (threads == 1) {
        for (std::size_t t = 0; t < params.n_trees; ++t) grow_tree(t);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < params.n_trees; t += threads) grow_tree(t);
            });
    }
    return model;
}

Prediction predict_forest(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.dim)
        throw DimensionError("forest: input has " + std::to_string(x.size()) + " features, model expects " +
                             std::to_string(model.dim));
    std::vector<double> scores(model.n_classes, 0.0);
    for (const auto& tree : model.trees) {
        const auto p = tree.distribution(x);
        for (std::size_t c = 0; c < scores.size(); ++c) scores[c] += p[c];
    }
    for (double& s : scores) s /= static_cast<double>(model.trees.size());
    return make_prediction(std::move(scores));
}

}  // namespace cxr::forest
