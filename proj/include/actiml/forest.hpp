#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "actiml/matrix.hpp"

namespace actiml {

enum class MaxFeaturesRule { Sqrt, All };

struct ForestParams {
    int n_estimators = 100;
    std::optional<int> max_depth;       // unset = unlimited
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    int random_state = 42;
    MaxFeaturesRule max_features = MaxFeaturesRule::Sqrt;

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// Flat node storage: feature_index < 0 marks a leaf, in which case only
// class_counts is meaningful; internal nodes leave class_counts at zero.
struct TreeNode {
    int feature_index = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<std::int64_t, 2> class_counts{0, 0};

    bool is_leaf() const { return feature_index < 0; }

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// nodes[0] is the root; children precede no parent (root, left subtree,
// right subtree order).
struct Tree {
    std::vector<TreeNode> nodes;

    friend bool operator==(const Tree&, const Tree&) = default;
};

struct Forest {
    std::vector<Tree> trees;
    ForestParams params;
    std::size_t n_features = 0;

    friend bool operator==(const Forest&, const Forest&) = default;
};

// Gini impurity 1 - p0^2 - p1^2 of a two-class count pair.
double gini(std::int64_t count0, std::int64_t count1);

// Trains params.n_estimators trees, each on a bootstrap sample of size n
// drawn from its own PRNG stream (seed split_seed(random_state, tree_index)).
// Per-tree stream protocol, in draw order:
//   1. n draws of next_below(n) form the bootstrap sample;
//   2. at each node that survives the stop checks (purity,
//      min_samples_split, max_depth), a feature subset of size
//      max(1, floor(sqrt(d))) is drawn by partial Fisher-Yates and searched
//      in ascending index order;
//   3. nodes are built root first, then left subtree, then right.
// Candidate thresholds are midpoints between consecutive distinct sorted
// values of a feature within the node; a candidate must leave at least
// min_samples_leaf rows on each side. Ties in split gain break toward the
// lowest feature index, then the lowest threshold. The result is a pure
// function of (X, y, params): n_threads only distributes whole trees across
// workers and never changes the output.
Forest train_forest(const Matrix& X, std::span<const int> y,
                    const ForestParams& params, int n_threads = 1);

// Majority class of the leaf the row is routed to (value <= threshold goes
// left); leaf tie votes class 0.
int tree_vote(const Tree& tree, std::span<const double> row);

// Majority vote over all trees, ties to class 0.
std::vector<int> predict_forest(const Forest& forest, const Matrix& X);

nlohmann::ordered_json forest_params_to_json(const ForestParams& params);
ForestParams forest_params_from_json(const nlohmann::json& doc);

nlohmann::ordered_json forest_to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& doc);

void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);

} // namespace actiml
