#include "actiml/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "actiml/errors.hpp"
#include "actiml/rng.hpp"

namespace actiml {

namespace {

void validate_params(const ForestParams& params) {
    if (params.n_estimators < 1) {
        throw ValidationError("forest: n_estimators must be >= 1");
    }
    if (params.min_samples_split < 2) {
        throw ValidationError("forest: min_samples_split must be >= 2");
    }
    if (params.min_samples_leaf < 1) {
        throw ValidationError("forest: min_samples_leaf must be >= 1");
    }
    if (params.max_depth && *params.max_depth < 0) {
        throw ValidationError("forest: max_depth must be >= 0");
    }
}

std::size_t subset_size(std::size_t d, MaxFeaturesRule rule) {
    if (rule == MaxFeaturesRule::All) return d;
    const auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(d)));
    return std::max<std::size_t>(1, k);
}

struct SplitCandidate {
    bool found = false;
    double score = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const int> y,
                const ForestParams& params, Rng& rng)
        : X_(X), y_(y), params_(params), rng_(rng) {}

    Tree build(const std::vector<std::size_t>& sample) {
        Tree tree;
        build_node(tree, sample, 0);
        return tree;
    }

private:
    std::int32_t build_node(Tree& tree, const std::vector<std::size_t>& rows,
                            int depth) {
        const auto index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();

        std::array<std::int64_t, 2> counts{0, 0};
        for (const std::size_t row : rows) counts[y_[row]]++;

        const bool pure = counts[0] == 0 || counts[1] == 0;
        const bool too_small =
            rows.size() < static_cast<std::size_t>(params_.min_samples_split);
        const bool at_depth_limit =
            params_.max_depth && depth >= *params_.max_depth;
        if (pure || too_small || at_depth_limit) {
            tree.nodes[index].class_counts = counts;
            return index;
        }

        const SplitCandidate best = find_best_split(rows, counts);
        if (!best.found) {
            tree.nodes[index].class_counts = counts;
            return index;
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (const std::size_t row : rows) {
            (X_(row, best.feature) <= best.threshold ? left_rows : right_rows)
                .push_back(row);
        }

        const std::int32_t left = build_node(tree, left_rows, depth + 1);
        const std::int32_t right = build_node(tree, right_rows, depth + 1);
        TreeNode& node = tree.nodes[index];
        node.feature_index = static_cast<int>(best.feature);
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        return index;
    }

    std::vector<std::size_t> draw_feature_subset() {
        const std::size_t d = X_.cols;
        const std::size_t k = subset_size(d, params_.max_features);
        std::vector<std::size_t> pool(d);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t pick = j + rng_.next_below(d - j);
            std::swap(pool[j], pool[pick]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    SplitCandidate find_best_split(const std::vector<std::size_t>& rows,
                                   const std::array<std::int64_t, 2>& totals) {
        const auto subset = draw_feature_subset();
        const auto m = static_cast<std::int64_t>(rows.size());
        const auto min_leaf = static_cast<std::int64_t>(params_.min_samples_leaf);

        SplitCandidate best;
        std::vector<std::pair<double, int>> column;
        column.reserve(rows.size());
        for (const std::size_t feature : subset) {
            column.clear();
            for (const std::size_t row : rows) {
                column.emplace_back(X_(row, feature), y_[row]);
            }
            std::sort(column.begin(), column.end());

            std::array<std::int64_t, 2> left{0, 0};
            for (std::int64_t j = 0; j + 1 < m; ++j) {
                left[column[j].second]++;
                if (column[j].first == column[j + 1].first) continue;
                const double threshold =
                    column[j].first +
                    (column[j + 1].first - column[j].first) / 2.0;
                // Guard against the midpoint rounding up onto the right
                // value, which would misroute that value leftward.
                if (!(threshold < column[j + 1].first)) continue;
                const std::int64_t n_left = j + 1;
                const std::int64_t n_right = m - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const std::array<std::int64_t, 2> right{totals[0] - left[0],
                                                        totals[1] - left[1]};
                const double score =
                    (static_cast<double>(n_left) * gini(left[0], left[1]) +
                     static_cast<double>(n_right) * gini(right[0], right[1])) /
                    static_cast<double>(m);
                if (!best.found || score < best.score) {
                    best = SplitCandidate{true, score, feature, threshold};
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    std::span<const int> y_;
    const ForestParams& params_;
    Rng& rng_;
};

Tree build_tree(const Matrix& X, std::span<const int> y,
                const ForestParams& params, int tree_index) {
    Rng rng(split_seed(static_cast<std::uint64_t>(params.random_state),
                       static_cast<std::uint64_t>(tree_index)));
    std::vector<std::size_t> sample(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        sample[i] = rng.next_below(X.rows);
    }
    TreeBuilder builder(X, y, params, rng);
    return builder.build(sample);
}

nlohmann::ordered_json node_to_json(const Tree& tree, std::int32_t index) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    nlohmann::ordered_json doc;
    if (node.is_leaf()) {
        doc["counts"] = {node.class_counts[0], node.class_counts[1]};
        return doc;
    }
    doc["feature"] = node.feature_index;
    doc["threshold"] = node.threshold;
    doc["left"] = node_to_json(tree, node.left);
    doc["right"] = node_to_json(tree, node.right);
    return doc;
}

std::int32_t node_from_json(const nlohmann::json& doc, Tree& tree,
                            std::size_t n_features) {
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (doc.contains("counts")) {
        const auto& counts = doc.at("counts");
        if (!counts.is_array() || counts.size() != 2) {
            throw ParseError("forest JSON: leaf counts must be a pair");
        }
        const auto c0 = counts.at(0).get<std::int64_t>();
        const auto c1 = counts.at(1).get<std::int64_t>();
        if (c0 < 0 || c1 < 0) {
            throw ParseError("forest JSON: negative leaf count");
        }
        tree.nodes[static_cast<std::size_t>(index)].class_counts = {c0, c1};
        return index;
    }
    const int feature = doc.at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
        throw ParseError("forest JSON: feature index out of range");
    }
    const double threshold = doc.at("threshold").get<double>();
    const std::int32_t left = node_from_json(doc.at("left"), tree, n_features);
    const std::int32_t right = node_from_json(doc.at("right"), tree, n_features);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature_index = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return index;
}

std::string max_features_name(MaxFeaturesRule rule) {
    return rule == MaxFeaturesRule::Sqrt ? "sqrt" : "all";
}

MaxFeaturesRule max_features_from_name(const std::string& name) {
    if (name == "sqrt") return MaxFeaturesRule::Sqrt;
    if (name == "all") return MaxFeaturesRule::All;
    throw ParseError("forest JSON: unknown max_features rule '" + name + "'");
}

} // namespace

nlohmann::ordered_json forest_params_to_json(const ForestParams& params) {
    return nlohmann::ordered_json{
        {"n_estimators", params.n_estimators},
        {"max_depth", params.max_depth
                          ? nlohmann::ordered_json(*params.max_depth)
                          : nlohmann::ordered_json(nullptr)},
        {"min_samples_split", params.min_samples_split},
        {"min_samples_leaf", params.min_samples_leaf},
        {"random_state", params.random_state},
        {"max_features", max_features_name(params.max_features)},
    };
}

ForestParams forest_params_from_json(const nlohmann::json& doc) {
    try {
        ForestParams params;
        params.n_estimators = doc.at("n_estimators").get<int>();
        if (!doc.at("max_depth").is_null()) {
            params.max_depth = doc.at("max_depth").get<int>();
        }
        params.min_samples_split = doc.at("min_samples_split").get<int>();
        params.min_samples_leaf = doc.at("min_samples_leaf").get<int>();
        params.random_state = doc.at("random_state").get<int>();
        params.max_features =
            max_features_from_name(doc.at("max_features").get<std::string>());
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed forest params JSON: ") + e.what());
    }
}

double gini(std::int64_t count0, std::int64_t count1) {
    if (count0 < 0 || count1 < 0) {
        throw ValidationError("gini: counts must be non-negative");
    }
    if (count0 == 0 && count1 == 0) {
        throw DomainError("gini: both counts zero");
    }
    const double total = static_cast<double>(count0 + count1);
    const double p0 = static_cast<double>(count0) / total;
    const double p1 = static_cast<double>(count1) / total;
    return 1.0 - (p0 * p0 + p1 * p1);
}

Forest train_forest(const Matrix& X, std::span<const int> y,
                    const ForestParams& params, int n_threads) {
    validate_params(params);
    if (X.rows == 0) throw ValidationError("train_forest: empty feature matrix");
    if (X.cols == 0) throw ValidationError("train_forest: matrix has no columns");
    if (y.size() != X.rows) {
        throw ValidationError("train_forest: label count " +
                              std::to_string(y.size()) + " != row count " +
                              std::to_string(X.rows));
    }
    for (const int label : y) {
        if (label != 0 && label != 1) {
            throw ValidationError("train_forest: labels must be 0 or 1");
        }
    }

    Forest forest;
    forest.params = params;
    forest.n_features = X.cols;
    forest.trees.resize(static_cast<std::size_t>(params.n_estimators));

    const int workers = std::clamp(n_threads, 1, params.n_estimators);
    if (workers == 1) {
        for (int i = 0; i < params.n_estimators; ++i) {
            forest.trees[static_cast<std::size_t>(i)] =
                build_tree(X, y, params, i);
        }
        return forest;
    }

    std::atomic<int> next_tree{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        try {
            for (;;) {
                const int i = next_tree.fetch_add(1);
                if (i >= params.n_estimators) break;
                forest.trees[static_cast<std::size_t>(i)] =
                    build_tree(X, y, params, i);
            }
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& thread : pool) thread.join();
    if (failure) std::rethrow_exception(failure);
    return forest;
}

int tree_vote(const Tree& tree, std::span<const double> row) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
        const std::size_t child =
            row[static_cast<std::size_t>(node->feature_index)] <= node->threshold
                ? static_cast<std::size_t>(node->left)
                : static_cast<std::size_t>(node->right);
        node = &tree.nodes[child];
    }
    return node->class_counts[1] > node->class_counts[0] ? 1 : 0;
}

std::vector<int> predict_forest(const Forest& forest, const Matrix& X) {
    if (X.cols != forest.n_features) {
        throw ValidationError("predict_forest: row width " +
                              std::to_string(X.cols) + " != model width " +
                              std::to_string(forest.n_features));
    }
    std::vector<int> predictions(X.rows);
    const auto n_trees = static_cast<std::int64_t>(forest.trees.size());
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::int64_t ones = 0;
        for (const Tree& tree : forest.trees) ones += tree_vote(tree, X.row(r));
        predictions[r] = 2 * ones > n_trees ? 1 : 0;
    }
    return predictions;
}

nlohmann::ordered_json forest_to_json(const Forest& forest) {
    nlohmann::ordered_json doc;
    doc["format"] = "actiml.forest";
    doc["version"] = 1;
    doc["n_features"] = forest.n_features;
    doc["params"] = forest_params_to_json(forest.params);
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const Tree& tree : forest.trees) trees.push_back(node_to_json(tree, 0));
    doc["trees"] = std::move(trees);
    return doc;
}

Forest forest_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "actiml.forest") {
            throw ParseError("forest JSON: unexpected format tag");
        }
        if (doc.at("version").get<int>() != 1) {
            throw ParseError("forest JSON: unsupported version");
        }
        Forest forest;
        forest.n_features = doc.at("n_features").get<std::size_t>();
        forest.params = forest_params_from_json(doc.at("params"));
        for (const auto& tree_doc : doc.at("trees")) {
            Tree tree;
            node_from_json(tree_doc, tree, forest.n_features);
            forest.trees.push_back(std::move(tree));
        }
        return forest;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed forest JSON: ") + e.what());
    }
}

void save_forest(const Forest& forest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << forest_to_json(forest).dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

Forest load_forest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON in '") + path + "': " +
                         e.what());
    }
    return forest_from_json(doc);
}

} // namespace actiml
