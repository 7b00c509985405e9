#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cxr/features.hpp"
#include "cxr/prediction.hpp"

namespace cxr::forest {

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;           // 0: unlimited
    std::size_t min_leaf = 1;
    std::size_t features_per_split = 0;  // 0: ceil(sqrt(dim))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    std::size_t threads = 1;  // trees own independent streams, so any value gives the same model

    bool operator==(const ForestParams&) const = default;
};

/// Internal nodes send x[feature] <= threshold to `left`. Every node keeps the
/// class counts of the (bootstrap) samples that reached it.
struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> counts;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    std::size_t leaf_index(std::span<const double> x) const;
    /// Normalised class counts of the leaf reached by x.
    std::vector<double> distribution(std::span<const double> x) const;
};

struct ForestModel {
    ForestParams params;
    std::size_t dim = 0;
    std::size_t n_classes = 0;
    std::vector<DecisionTree> trees;
    std::string descriptor_id;
};

/// Gini impurity 1 - sum p_c^2 of a count vector; 0 for an empty node.
double gini(std::span<const double> counts);

/// Each tree is grown on a bootstrap sample drawn from its own stream
/// derive_seed(seed, tree index). At each node a random subset of
/// features_per_split features is searched for the split with the lowest
/// weighted child Gini; if none of them separates the node, the remaining
/// features are tried in the same random order.
ForestModel train_forest(const features::FeatureMatrix& X, const std::vector<int>& y, const ForestParams& params,
                         std::size_t n_classes = 0);

/// Average of the per-tree leaf distributions.
Prediction predict_forest(const ForestModel& model, std::span<const double> x);

}  // namespace cxr::forest
