#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "treenet/dataset.hpp"
#include "treenet/random.hpp"

namespace treenet {

enum class SplitMode { exhaustive, random_threshold };

struct TreeConfig {
  std::optional<std::size_t> max_depth;  // absent: unbounded; root has depth 0
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  /// Features drawn per node. Absent means all features for a standalone
  /// tree and ceil(sqrt(d)) inside a forest.
  std::optional<std::size_t> n_candidate_features;
  SplitMode split_mode = SplitMode::exhaustive;
  std::uint64_t seed = 0;

  bool operator==(const TreeConfig&) const = default;
};

/// Throws InvalidConfig when a field is out of range.
void validate(const TreeConfig& config);

/// 1 - sum_k (counts_k / total)^2. Throws EmptyCounts on an all-zero vector.
double gini(std::span<const std::uint64_t> counts);

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

/// Best Gini split of `rows` over `candidate_features`. Rows with
/// x[feature] <= threshold go left. Exhaustive mode scores the midpoints of
/// adjacent distinct values; random_threshold mode draws one threshold per
/// feature uniformly in [min, max) from `rng`. Both children must hold at
/// least min_samples_leaf rows. Ties go to the lower feature index, then the
/// lower threshold. Split scores are compared exactly in integer
/// arithmetic, so ties are true ties. Absent when nothing decreases impurity.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         const TreeConfig& config, Rng* rng = nullptr);

/// Flat node record. Leaves have feature == kLeaf and own C class counts.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t n_rows = 0;
  double impurity_decrease = 0.0;
  std::uint32_t counts_offset = 0;  // into DecisionTree::leaf_counts, leaves only

  bool is_leaf() const noexcept { return feature == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

/// Fitted CART tree. Nodes are stored in pre-order (root first, children
/// always after their parent).
class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::size_t n_classes, std::size_t n_features, std::vector<TreeNode> nodes,
               std::vector<std::uint32_t> leaf_counts);

  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::uint32_t>& leaf_counts() const noexcept { return leaf_counts_; }

  std::size_t depth() const;
  std::size_t leaf_count() const;

  /// Leaf reached by x.
  const TreeNode& route(std::span<const double> x) const noexcept;
  std::span<const std::uint32_t> counts_of(const TreeNode& leaf) const noexcept {
    return {leaf_counts_.data() + leaf.counts_offset, n_classes_};
  }

  /// out[k] += weight * counts_k / total for the leaf reached by x.
  void accumulate_proba(std::span<const double> x, std::span<double> out, double weight = 1.0) const;

  std::vector<double> predict_proba(std::span<const double> x) const;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint32_t> leaf_counts_;
};

/// Greedy recursive induction over `rows` (duplicates allowed, e.g. a
/// bootstrap sample). All randomness comes from `rng`.
DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows,
                      const TreeConfig& config, Rng& rng);

/// Same, with a stream seeded from config.seed.
DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows,
                      const TreeConfig& config);

std::vector<double> predict_proba_tree(const DecisionTree& tree, std::span<const double> x);

/// Weighted impurity decrease per feature, (node_rows / n_training_rows) *
/// decrease summed over the nodes that split on it, normalized to sum 1.
/// All zeros when the tree never splits.
std::vector<double> tree_feature_importance(const DecisionTree& tree, std::size_t n_training_rows);
std::vector<double> tree_feature_importance(const DecisionTree& tree);

}  // namespace treenet
