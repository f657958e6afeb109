#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "actiml/errors.hpp"
#include "actiml/forest.hpp"
#include "actiml/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace actiml;
using testsupport::TempDir;

namespace {

Matrix make_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.next_uniform(-5.0, 5.0);
    }
    return m;
}

std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
    Rng rng(seed ^ 0xabcdef);
    std::vector<int> y(n);
    for (auto& label : y) label = static_cast<int>(rng.next_below(2));
    return y;
}

// Borrows nothing from the production builder: walks the documented
// per-tree stream protocol with the exhaustive split oracle and mirrors
// the stop rules, so any drift in draw order, candidate enumeration, or
// tie-breaking shows up as a tree mismatch.
std::int32_t replay_node(Tree& tree, const Matrix& X, std::span<const int> y,
                         const ForestParams& params, Rng& rng,
                         const std::vector<std::size_t>& rows, int depth) {
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::array<std::int64_t, 2> counts{0, 0};
    for (const std::size_t row : rows) counts[static_cast<std::size_t>(y[row])]++;
    const bool stop = counts[0] == 0 || counts[1] == 0 ||
                      rows.size() < static_cast<std::size_t>(params.min_samples_split) ||
                      (params.max_depth && depth >= *params.max_depth);
    if (stop) {
        tree.nodes[static_cast<std::size_t>(index)].class_counts = counts;
        return index;
    }

    const std::size_t d = X.cols;
    std::size_t k = d;
    if (params.max_features == MaxFeaturesRule::Sqrt) {
        k = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    }
    std::vector<std::size_t> pool(d);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t j = 0; j < k; ++j) {
        std::swap(pool[j], pool[j + rng.next_below(d - j)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());

    const oracles::BestSplit best =
        oracles::best_split(X, rows, y, pool, params.min_samples_leaf);
    if (!best.found) {
        tree.nodes[static_cast<std::size_t>(index)].class_counts = counts;
        return index;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (const std::size_t row : rows) {
        (X(row, best.feature) <= best.threshold ? left_rows : right_rows).push_back(row);
    }
    const std::int32_t left = replay_node(tree, X, y, params, rng, left_rows, depth + 1);
    const std::int32_t right = replay_node(tree, X, y, params, rng, right_rows, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature_index = static_cast<int>(best.feature);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return index;
}

Tree replay_tree(const Matrix& X, std::span<const int> y,
                 const ForestParams& params, int tree_index) {
    Rng rng(split_seed(static_cast<std::uint64_t>(params.random_state),
                       static_cast<std::uint64_t>(tree_index)));
    std::vector<std::size_t> sample(X.rows);
    for (auto& row : sample) row = rng.next_below(X.rows);
    Tree tree;
    replay_node(tree, X, y, params, rng, sample, 0);
    return tree;
}

} // namespace

TEST_CASE("gini impurity of two-class counts") {
    CHECK(gini(10, 0) == 0.0);
    CHECK(gini(0, 3) == 0.0);
    CHECK(gini(5, 5) == 0.5);
    CHECK(gini(3, 1) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK_THROWS_AS(gini(0, 0), DomainError);
    CHECK_THROWS_AS(gini(-1, 2), ValidationError);
}

TEST_CASE("single-class training collapses every tree to one leaf") {
    const Matrix X = random_matrix(12, 3, 5);
    const std::vector<int> y(12, 1);
    ForestParams params;
    params.n_estimators = 10;
    const Forest forest = train_forest(X, y, params);
    REQUIRE(forest.trees.size() == 10);
    for (const Tree& tree : forest.trees) {
        REQUIRE(tree.nodes.size() == 1);
        CHECK(tree.nodes[0].is_leaf());
        CHECK(tree.nodes[0].class_counts[0] == 0);
        CHECK(tree.nodes[0].class_counts[1] == 12);
    }
    CHECK(predict_forest(forest, X) == std::vector<int>(12, 1));
}

TEST_CASE("a wide-margin one-dimensional problem is learned exactly") {
    const Matrix X = make_matrix({{0}, {1}, {2}, {10}, {11}, {12}});
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    const Forest forest = train_forest(X, y, {});
    CHECK(predict_forest(forest, X) == y);

    const Matrix queries = make_matrix({{1.5}, {10.5}, {-50.0}, {500.0}});
    CHECK(predict_forest(forest, queries) == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("training is deterministic and thread-count independent") {
    const Matrix X = random_matrix(40, 4, 17);
    const std::vector<int> y = random_labels(40, 17);
    ForestParams params;
    params.n_estimators = 12;
    params.random_state = 9;

    const Forest a = train_forest(X, y, params, 1);
    const Forest b = train_forest(X, y, params, 1);
    CHECK(a == b);

    const Forest c = train_forest(X, y, params, 4);
    CHECK(a == c);

    params.random_state = 10;
    const Forest d = train_forest(X, y, params, 1);
    CHECK_FALSE(a == d);
}

TEST_CASE("predictions are per-row: permuting queries permutes outputs") {
    const Matrix X = random_matrix(30, 3, 23);
    const std::vector<int> y = random_labels(30, 23);
    ForestParams params;
    params.n_estimators = 15;
    const Forest forest = train_forest(X, y, params);

    Matrix reversed(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t c = 0; c < X.cols; ++c) {
            reversed(r, c) = X(X.rows - 1 - r, c);
        }
    }
    const std::vector<int> forward = predict_forest(forest, X);
    const std::vector<int> backward = predict_forest(forest, reversed);
    for (std::size_t r = 0; r < X.rows; ++r) {
        CHECK(forward[r] == backward[X.rows - 1 - r]);
    }
}

TEST_CASE("forest prediction is the strict majority of tree votes") {
    const Matrix X = random_matrix(25, 3, 31);
    const std::vector<int> y = random_labels(25, 31);
    ForestParams params;
    params.n_estimators = 7;
    const Forest forest = train_forest(X, y, params);
    const std::vector<int> predictions = predict_forest(forest, X);
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::int64_t ones = 0;
        for (const Tree& tree : forest.trees) ones += tree_vote(tree, X.row(r));
        CHECK(predictions[r] == (2 * ones > 7 ? 1 : 0));
    }
}

TEST_CASE("vote ties at every level resolve to class 0") {
    const TreeNode leaf0{-1, 0.0, -1, -1, {5, 0}};
    const TreeNode leaf1{-1, 0.0, -1, -1, {0, 5}};
    const TreeNode tied{-1, 0.0, -1, -1, {5, 5}};
    const std::vector<double> row = {0.0};

    CHECK(tree_vote(Tree{{leaf0}}, row) == 0);
    CHECK(tree_vote(Tree{{leaf1}}, row) == 1);
    CHECK(tree_vote(Tree{{tied}}, row) == 0);

    Forest split_vote;
    split_vote.n_features = 1;
    split_vote.trees = {Tree{{leaf0}}, Tree{{leaf1}}};
    CHECK(predict_forest(split_vote, make_matrix({{0.0}})) == std::vector<int>{0});

    split_vote.trees = {Tree{{leaf1}}, Tree{{leaf1}}, Tree{{leaf0}}};
    CHECK(predict_forest(split_vote, make_matrix({{0.0}})) == std::vector<int>{1});
}

TEST_CASE("routing sends values at the threshold left") {
    const TreeNode root{0, 1.5, 1, 2, {0, 0}};
    const TreeNode left{-1, 0.0, -1, -1, {3, 0}};
    const TreeNode right{-1, 0.0, -1, -1, {0, 3}};
    const Tree tree{{root, left, right}};
    CHECK(tree_vote(tree, std::vector<double>{1.5}) == 0);
    CHECK(tree_vote(tree, std::vector<double>{1.5000001}) == 1);
}

TEST_CASE("trees replay exactly from the documented stream protocol") {
    for (const int random_state : {3, 4, 5}) {
        const Matrix X = random_matrix(25, 4, static_cast<std::uint64_t>(random_state));
        const std::vector<int> y =
            random_labels(25, static_cast<std::uint64_t>(random_state));

        ForestParams params;
        params.n_estimators = 3;
        params.random_state = random_state;

        for (const auto depth : {std::optional<int>{1}, std::optional<int>{2},
                                 std::optional<int>{}}) {
            params.max_depth = depth;
            const Forest forest = train_forest(X, y, params);
            for (int t = 0; t < params.n_estimators; ++t) {
                const Tree expected = replay_tree(X, y, params, t);
                REQUIRE(forest.trees[static_cast<std::size_t>(t)] == expected);
            }
        }
    }
}

TEST_CASE("replay also matches with min_samples_leaf and all features") {
    const Matrix X = random_matrix(30, 5, 77);
    const std::vector<int> y = random_labels(30, 77);
    ForestParams params;
    params.n_estimators = 4;
    params.min_samples_leaf = 4;
    params.min_samples_split = 6;
    params.max_features = MaxFeaturesRule::All;
    params.random_state = 12;
    const Forest forest = train_forest(X, y, params);
    for (int t = 0; t < params.n_estimators; ++t) {
        REQUIRE(forest.trees[static_cast<std::size_t>(t)] ==
                replay_tree(X, y, params, t));
    }
}

TEST_CASE("every non-root leaf holds at least min_samples_leaf rows") {
    const Matrix X = random_matrix(60, 4, 41);
    const std::vector<int> y = random_labels(60, 41);
    ForestParams params;
    params.n_estimators = 10;
    params.min_samples_leaf = 5;
    const Forest forest = train_forest(X, y, params);
    for (const Tree& tree : forest.trees) {
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const TreeNode& node = tree.nodes[i];
            if (i > 0 && node.is_leaf()) {
                CHECK(node.class_counts[0] + node.class_counts[1] >= 5);
            }
        }
    }
}

TEST_CASE("max_depth zero forces a single root leaf per tree") {
    const Matrix X = random_matrix(20, 3, 53);
    const std::vector<int> y = random_labels(20, 53);
    ForestParams params;
    params.n_estimators = 5;
    params.max_depth = 0;
    const Forest forest = train_forest(X, y, params);
    for (const Tree& tree : forest.trees) {
        REQUIRE(tree.nodes.size() == 1);
        CHECK(tree.nodes[0].is_leaf());
        CHECK(tree.nodes[0].class_counts[0] + tree.nodes[0].class_counts[1] == 20);
    }
}

TEST_CASE("scaling a feature by a power of two scales thresholds exactly") {
    const Matrix X = random_matrix(30, 1, 67);
    const std::vector<int> y = random_labels(30, 67);
    Matrix scaled(X.rows, 1);
    for (std::size_t r = 0; r < X.rows; ++r) scaled(r, 0) = X(r, 0) * 4.0;

    ForestParams params;
    params.n_estimators = 8;
    const Forest base = train_forest(X, y, params);
    const Forest wide = train_forest(scaled, y, params);

    REQUIRE(base.trees.size() == wide.trees.size());
    for (std::size_t t = 0; t < base.trees.size(); ++t) {
        const auto& a = base.trees[t].nodes;
        const auto& b = wide.trees[t].nodes;
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].feature_index == b[i].feature_index);
            CHECK(a[i].left == b[i].left);
            CHECK(a[i].class_counts == b[i].class_counts);
            if (!a[i].is_leaf()) CHECK(b[i].threshold == 4.0 * a[i].threshold);
        }
    }
    CHECK(predict_forest(base, X) == predict_forest(wide, scaled));
}

TEST_CASE("forest json and file round-trips preserve the model") {
    const Matrix X = random_matrix(25, 3, 71);
    const std::vector<int> y = random_labels(25, 71);
    ForestParams params;
    params.n_estimators = 6;
    params.max_depth = 3;
    params.min_samples_leaf = 2;
    const Forest forest = train_forest(X, y, params);

    const nlohmann::ordered_json doc = forest_to_json(forest);
    CHECK(doc.at("format") == "actiml.forest");
    CHECK(doc.at("version") == 1);
    CHECK(forest_from_json(doc) == forest);

    // Unlimited depth serializes as null.
    ForestParams unlimited;
    CHECK(forest_params_to_json(unlimited).at("max_depth").is_null());
    CHECK(forest_params_from_json(forest_params_to_json(unlimited)) == unlimited);

    TempDir dir;
    const auto path = (dir.path() / "forest.json").string();
    save_forest(forest, path);
    const Forest loaded = load_forest(path);
    CHECK(loaded == forest);
    CHECK(predict_forest(loaded, X) == predict_forest(forest, X));
}

TEST_CASE("forest json parsing rejects malformed documents") {
    const Matrix X = make_matrix({{0}, {1}, {2}, {3}});
    const std::vector<int> y = {0, 0, 1, 1};
    ForestParams params;
    params.n_estimators = 2;
    const Forest forest = train_forest(X, y, params);

    nlohmann::ordered_json doc = forest_to_json(forest);
    doc["version"] = 2;
    CHECK_THROWS_AS(forest_from_json(doc), ParseError);

    doc = forest_to_json(forest);
    doc["format"] = "something.else";
    CHECK_THROWS_AS(forest_from_json(doc), ParseError);

    doc = forest_to_json(forest);
    doc["params"]["max_features"] = "log2";
    CHECK_THROWS_AS(forest_from_json(doc), ParseError);

    doc = forest_to_json(forest);
    doc["n_features"] = 0; // every stored feature index is now out of range
    CHECK_THROWS_AS(forest_from_json(doc), ParseError);

    CHECK_THROWS_AS(forest_from_json(nlohmann::json::object()), ParseError);

    TempDir dir;
    testsupport::write_file(dir.path() / "bad.json", "{not json");
    CHECK_THROWS_AS(load_forest((dir.path() / "bad.json").string()), ParseError);
    CHECK_THROWS_AS(load_forest((dir.path() / "missing.json").string()), IoError);
}

TEST_CASE("training validates parameters and inputs") {
    const Matrix X = make_matrix({{0}, {1}});
    const std::vector<int> y = {0, 1};

    ForestParams params;
    params.n_estimators = 0;
    CHECK_THROWS_AS(train_forest(X, y, params), ValidationError);

    params = {};
    params.min_samples_split = 1;
    CHECK_THROWS_AS(train_forest(X, y, params), ValidationError);

    params = {};
    params.min_samples_leaf = 0;
    CHECK_THROWS_AS(train_forest(X, y, params), ValidationError);

    params = {};
    params.max_depth = -1;
    CHECK_THROWS_AS(train_forest(X, y, params), ValidationError);

    params = {};
    CHECK_THROWS_AS(train_forest(X, std::vector<int>{0}, params), ValidationError);
    CHECK_THROWS_AS(train_forest(X, std::vector<int>{0, 2}, params), ValidationError);
    CHECK_THROWS_AS(train_forest(Matrix(), y, params), ValidationError);

    const Forest forest = train_forest(X, y, params);
    CHECK_THROWS_AS(predict_forest(forest, random_matrix(3, 2, 1)), ValidationError);
}
