#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "treenet/error.hpp"
#include "treenet/forest.hpp"

using namespace treenet;

namespace {

// Single-leaf tree with the given counts.
DecisionTree leaf_tree(std::vector<std::uint32_t> counts, std::size_t d = 1) {
  TreeNode leaf;
  std::uint32_t n = 0;
  for (auto c : counts) n += c;
  leaf.n_rows = n;
  const std::size_t c = counts.size();
  return DecisionTree(c, d, {leaf}, std::move(counts));
}

// Stump on `feature` at threshold 0 with the given left/right counts.
DecisionTree stump(std::int32_t feature, std::size_t d, std::vector<std::uint32_t> left,
                   std::vector<std::uint32_t> right, double decrease = 0.5) {
  const auto c = static_cast<std::uint32_t>(left.size());
  TreeNode root;
  root.feature = feature;
  root.threshold = 0.0;
  root.left = 1;
  root.right = 2;
  root.impurity_decrease = decrease;
  TreeNode l, r;
  l.counts_offset = 0;
  r.counts_offset = c;
  for (auto v : left) l.n_rows += v;
  for (auto v : right) r.n_rows += v;
  root.n_rows = l.n_rows + r.n_rows;
  std::vector<std::uint32_t> counts = left;
  counts.insert(counts.end(), right.begin(), right.end());
  return DecisionTree(c, d, {root, l, r}, counts);
}

ForestModel forest_of(std::vector<DecisionTree> trees) {
  ForestModel m;
  m.n_classes = trees.front().n_classes();
  m.input_dim = trees.front().n_features();
  m.config.n_trees = trees.size();
  m.trees = std::move(trees);
  return m;
}

}  // namespace

TEST_CASE("forest config validation") {
  ForestConfig cfg = make_forest_config(ForestKind::bagged, 0, 1);
  CHECK_THROWS_AS(validate(cfg), Error);
  const Dataset ds = make_blobs(2, 5, 2, 0.1, 1);
  CHECK_THROWS_AS(fit_forest(ds, test::all_rows(10), cfg), Error);

  cfg = make_forest_config(ForestKind::extra, 3, 1);
  CHECK(cfg.tree.split_mode == SplitMode::random_threshold);
  cfg.tree.split_mode = SplitMode::exhaustive;
  CHECK_THROWS_AS(validate(cfg), Error);
  CHECK(make_forest_config(ForestKind::bagged, 3, 1).tree.split_mode == SplitMode::exhaustive);
}

TEST_CASE("default candidate features") {
  CHECK(default_candidate_features(1) == 1);
  CHECK(default_candidate_features(4) == 2);
  CHECK(default_candidate_features(5) == 3);
  CHECK(default_candidate_features(20) == 5);
  CHECK(default_candidate_features(129) == 12);
}

TEST_CASE("forest probability is the tree mean") {
  SUBCASE("two single-leaf trees") {
    const auto m = forest_of({leaf_tree({1, 0}), leaf_tree({0, 1})});
    const std::vector<double> x{3.0};
    CHECK(predict_proba_forest(m, x) == std::vector<double>{0.5, 0.5});
  }
  SUBCASE("one tree equals the tree") {
    const auto t = stump(0, 2, {3, 1}, {0, 2});
    const auto m = forest_of({t});
    const std::vector<double> x{1.0, 0.0};
    CHECK(predict_proba_forest(m, x) == t.predict_proba(x));
  }
  SUBCASE("three-tree hand average") {
    // x = (-1, 1): tree A goes left (3/4, 1/4, 0); tree B goes right
    // (0, 0, 1); tree C is a leaf (1/2, 1/2, 0).
    // Mean: (5/12, 3/12, 4/12).
    const auto m = forest_of({stump(0, 2, {3, 1, 0}, {0, 1, 1}), stump(1, 2, {1, 1, 1}, {0, 0, 2}),
                              leaf_tree({1, 1, 0}, 2)});
    const std::vector<double> x{-1.0, 1.0};
    const auto p = predict_proba_forest(m, x);
    CHECK(p[0] == doctest::Approx(5.0 / 12).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(3.0 / 12).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(4.0 / 12).epsilon(1e-15));
  }
  SUBCASE("dimension mismatch") {
    const auto m = forest_of({leaf_tree({1, 0}, 2)});
    const std::vector<double> x{1.0};
    CHECK_THROWS_AS(predict_proba_forest(m, x), Error);
    try {
      predict_proba_forest(m, x);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }
}

TEST_CASE("forest feature importance") {
  SUBCASE("all-leaf forest") {
    const auto m = forest_of({leaf_tree({1, 2}, 3), leaf_tree({2, 1}, 3)});
    CHECK(forest_feature_importance(m) == std::vector<double>{0, 0, 0});
  }
  SUBCASE("every tree splits feature 2") {
    const auto m = forest_of({stump(2, 3, {2, 0}, {0, 2}), stump(2, 3, {1, 0}, {1, 3})});
    CHECK(forest_feature_importance(m) == std::vector<double>{0, 0, 1});
  }
  SUBCASE("two-tree hand average") {
    // Tree A splits only feature 0: (1, 0). Tree B is the two-split tree
    // from the tree tests with equal weighted decreases: (1/2, 1/2).
    // Mean: (3/4, 1/4).
    const Dataset ds = test::make_dataset({{1, 5}, {2, 5}, {5, 1}, {7, 2}, {6, 8}, {8, 9}}, {0, 0, 1, 1, 2, 2});
    const DecisionTree b = fit_tree(ds, test::all_rows(6), TreeConfig{});
    const DecisionTree a = stump(0, 2, {2, 0, 0}, {0, 2, 2});
    const auto imp = forest_feature_importance(forest_of({a, b}));
    CHECK(imp[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(imp[1] == doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("fit_forest") {
  const Dataset ds = make_blobs(3, 20, 4, 1.5, 11);
  const auto rows = test::all_rows(ds.size());
  for (ForestKind kind : {ForestKind::bagged, ForestKind::extra}) {
    CAPTURE(static_cast<int>(kind));
    const ForestConfig cfg = make_forest_config(kind, 7, 99);
    const ForestModel m = fit_forest(ds, rows, cfg);
    CHECK(m.trees.size() == 7);
    CHECK(m.n_classes == 3);
    CHECK(m.input_dim == 4);
    CHECK(fit_forest(ds, rows, cfg) == m);
    CHECK(fit_forest(ds, rows, cfg, 3) == m);
    CHECK_FALSE(fit_forest(ds, rows, make_forest_config(kind, 7, 100)) == m);

    // Single tree forest is deterministic and its prediction is the tree's.
    const ForestModel one = fit_forest(ds, rows, make_forest_config(kind, 1, 5));
    CHECK(one == fit_forest(ds, rows, make_forest_config(kind, 1, 5)));
    CHECK(predict_proba_forest(one, ds.row(0)) == one.trees[0].predict_proba(ds.row(0)));

    // Properties: simplex outputs and invariance to tree order.
    ForestModel shuffled = m;
    Rng rng(3);
    rng.shuffle(shuffled.trees);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto p = predict_proba_forest(m, ds.row(i));
      const auto q = predict_proba_forest(shuffled, ds.row(i));
      double sum = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(p[k] >= 0.0);
        CHECK(std::abs(p[k] - q[k]) <= 1e-15);
        sum += p[k];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    const auto imp = forest_feature_importance(m);
    CHECK(std::abs(std::accumulate(imp.begin(), imp.end(), 0.0) - 1.0) <= 1e-12);
  }
}

TEST_CASE("bagged trees train on bootstrap samples, extra trees on all rows") {
  const Dataset ds = make_blobs(2, 30, 3, 2.0, 4);
  const auto rows = test::all_rows(ds.size());
  const ForestModel extra = fit_forest(ds, rows, make_forest_config(ForestKind::extra, 5, 1));
  for (const auto& t : extra.trees) CHECK(t.nodes()[0].n_rows == ds.size());
  // Bootstrap draws n rows with replacement, so the root still sees n rows
  // but the leaves' counts reveal duplicates; trees must differ.
  const ForestModel bagged = fit_forest(ds, rows, make_forest_config(ForestKind::bagged, 5, 1));
  for (const auto& t : bagged.trees) CHECK(t.nodes()[0].n_rows == ds.size());
  CHECK_FALSE(bagged.trees[0] == bagged.trees[1]);
}

TEST_CASE("separable blobs reach 100% training accuracy") {
  const Dataset ds = make_blobs(4, 25, 6, 1e-9, 8);
  std::vector<std::vector<double>> centers;
  for (std::size_t k = 0; k < 4; ++k) centers.push_back(blob_center(k, 6));
  const auto rows = test::all_rows(ds.size());
  for (ForestKind kind : {ForestKind::bagged, ForestKind::extra}) {
    const ForestModel m = fit_forest(ds, rows, make_forest_config(kind, 20, 17));
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto p = predict_proba_forest(m, ds.row(i));
      const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      const std::vector<double> x(ds.row(i).begin(), ds.row(i).end());
      CHECK(oracle::nearest_center(centers, x) == ds.label(i));
      CHECK(pred == ds.label(i));
    }
  }
}
