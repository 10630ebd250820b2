#include "treenet/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treenet/error.hpp"

namespace treenet {

using u128 = unsigned __int128;

void validate(const TreeConfig& config) {
  if (config.min_samples_leaf < 1) throw Error(ErrorCode::InvalidConfig, "min_samples_leaf must be >= 1");
  if (config.min_samples_split < 2) throw Error(ErrorCode::InvalidConfig, "min_samples_split must be >= 2");
  if (config.n_candidate_features && *config.n_candidate_features < 1)
    throw Error(ErrorCode::InvalidConfig, "n_candidate_features must be >= 1");
}

double gini(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw Error(ErrorCode::EmptyCounts, "gini of an empty node");
  const double t = static_cast<double>(total);
  double sum_sq = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / t;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace {

// Split quality sum_L/n_L + sum_R/n_R as an exact fraction, where sum_X is
// the sum of squared class counts of child X. Maximizing it maximizes the
// Gini impurity decrease for a fixed parent.
struct SplitScore {
  u128 num = 0;
  u128 den = 1;

  static SplitScore of(std::uint64_t sq_left, std::uint64_t n_left, std::uint64_t sq_right,
                       std::uint64_t n_right) {
    return {u128(sq_left) * n_right + u128(sq_right) * n_left, u128(n_left) * n_right};
  }
  bool better_than(const SplitScore& other) const { return num * other.den > other.num * den; }
};

struct NodeStats {
  std::vector<std::uint64_t> counts;
  std::uint64_t sum_sq = 0;
  std::uint64_t n = 0;
};

NodeStats node_stats(const Dataset& data, std::span<const std::size_t> rows) {
  NodeStats s;
  s.counts.assign(data.n_classes(), 0);
  for (std::size_t r : rows) ++s.counts[data.label(r)];
  for (auto c : s.counts) s.sum_sq += c * c;
  s.n = rows.size();
  return s;
}

// Decrease = score / n - sum_sq / n^2, evaluated from the exact numerator.
// Returns a negative value when the split does not strictly decrease impurity.
double impurity_decrease(const SplitScore& score, const NodeStats& parent) {
  const u128 gain = score.num * parent.n;
  const u128 base = u128(parent.sum_sq) * score.den;
  if (gain <= base) return -1.0;
  const double nn = static_cast<double>(parent.n);
  return static_cast<double>(gain - base) / (static_cast<double>(score.den) * nn * nn);
}

double midpoint_threshold(double lo, double hi) {
  double mid = std::midpoint(lo, hi);
  if (!(mid < hi)) mid = lo;  // adjacent doubles
  return mid;
}

struct Best {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  SplitScore score;

  void offer(std::size_t f, double t, const SplitScore& s) {
    // Features arrive ascending and thresholds ascending within a feature,
    // so a strict comparison implements the tie rule.
    if (!found || s.better_than(score)) {
      found = true;
      feature = f;
      threshold = t;
      score = s;
    }
  }
};

void scan_exhaustive(const Dataset& data, std::span<const std::size_t> rows, std::size_t feature,
                     const NodeStats& parent, std::size_t min_leaf, Best& best,
                     std::vector<std::pair<double, ClassId>>& buffer,
                     std::vector<std::uint64_t>& left) {
  buffer.clear();
  for (std::size_t r : rows) buffer.emplace_back(data.features()(r, feature), data.label(r));
  std::sort(buffer.begin(), buffer.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (!(buffer.front().first < buffer.back().first)) return;

  left.assign(parent.counts.size(), 0);
  std::uint64_t sq_left = 0;
  std::uint64_t sq_right = parent.sum_sq;
  const std::uint64_t n = parent.n;
  for (std::size_t i = 0; i + 1 < buffer.size(); ++i) {
    const ClassId y = buffer[i].second;
    const std::uint64_t l = left[y]++;
    const std::uint64_t r = parent.counts[y] - l;  // right count before the move
    sq_left += 2 * l + 1;
    sq_right -= 2 * r - 1;
    const std::uint64_t n_left = i + 1;
    const std::uint64_t n_right = n - n_left;
    if (n_left < min_leaf) continue;
    if (n_right < min_leaf) break;
    if (!(buffer[i].first < buffer[i + 1].first)) continue;
    best.offer(feature, midpoint_threshold(buffer[i].first, buffer[i + 1].first),
               SplitScore::of(sq_left, n_left, sq_right, n_right));
  }
}

void scan_random(const Dataset& data, std::span<const std::size_t> rows, std::size_t feature,
                 const NodeStats& parent, std::size_t min_leaf, Rng& rng, Best& best,
                 std::vector<std::uint64_t>& left) {
  double lo = data.features()(rows[0], feature);
  double hi = lo;
  for (std::size_t r : rows) {
    const double v = data.features()(r, feature);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo < hi)) return;
  double threshold = lo + rng.uniform01() * (hi - lo);
  if (!(threshold < hi)) threshold = lo;

  left.assign(parent.counts.size(), 0);
  std::uint64_t n_left = 0;
  for (std::size_t r : rows) {
    if (data.features()(r, feature) <= threshold) {
      ++left[data.label(r)];
      ++n_left;
    }
  }
  const std::uint64_t n_right = parent.n - n_left;
  if (n_left < min_leaf || n_right < min_leaf) return;
  std::uint64_t sq_left = 0, sq_right = 0;
  for (std::size_t k = 0; k < left.size(); ++k) {
    const std::uint64_t r = parent.counts[k] - left[k];
    sq_left += left[k] * left[k];
    sq_right += r * r;
  }
  best.offer(feature, threshold, SplitScore::of(sq_left, n_left, sq_right, n_right));
}

std::optional<SplitCandidate> best_split_impl(const Dataset& data, std::span<const std::size_t> rows,
                                              std::span<const std::size_t> candidate_features,
                                              const TreeConfig& config, Rng* rng,
                                              const NodeStats& parent) {
  if (rows.size() < config.min_samples_split || rows.size() < 2 * config.min_samples_leaf ||
      candidate_features.empty())
    return std::nullopt;
  if (config.split_mode == SplitMode::random_threshold && rng == nullptr)
    throw Error(ErrorCode::InvalidArgument, "random_threshold split needs a random stream");

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  Best best;
  std::vector<std::pair<double, ClassId>> buffer;
  buffer.reserve(rows.size());
  std::vector<std::uint64_t> left;
  for (std::size_t f : features) {
    if (f >= data.n_features())
      throw Error(ErrorCode::DimensionMismatch, "candidate feature " + std::to_string(f) + " out of range");
    if (config.split_mode == SplitMode::exhaustive)
      scan_exhaustive(data, rows, f, parent, config.min_samples_leaf, best, buffer, left);
    else
      scan_random(data, rows, f, parent, config.min_samples_leaf, *rng, best, left);
  }
  if (!best.found) return std::nullopt;
  const double decrease = impurity_decrease(best.score, parent);
  if (!(decrease > 0.0)) return std::nullopt;
  return SplitCandidate{best.feature, best.threshold, decrease};
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TreeConfig& config, Rng& rng, std::size_t n_candidates)
      : data_(data), config_(config), rng_(rng), n_candidates_(n_candidates) {}

  std::uint32_t build(std::span<std::size_t> rows, std::size_t depth) {
    NodeStats stats = node_stats(data_, rows);
    const auto nonzero = std::count_if(stats.counts.begin(), stats.counts.end(),
                                       [](std::uint64_t c) { return c > 0; });
    const bool depth_reached = config_.max_depth && depth >= *config_.max_depth;
    if (nonzero <= 1 || depth_reached || rows.size() < config_.min_samples_split)
      return make_leaf(stats);

    auto features = rng_.sample_without_replacement(data_.n_features(), n_candidates_);
    auto split = best_split_impl(data_, rows, features, config_, &rng_, stats);
    if (!split && features.size() < data_.n_features()) {
      // The sampled features cannot split this node; fall back to the rest
      // so an impure node only becomes a leaf when no feature separates it.
      std::vector<bool> taken(data_.n_features(), false);
      for (auto f : features) taken[f] = true;
      std::vector<std::size_t> rest;
      for (std::size_t f = 0; f < taken.size(); ++f)
        if (!taken[f]) rest.push_back(f);
      split = best_split_impl(data_, rows, rest, config_, &rng_, stats);
    }
    if (!split) return make_leaf(stats);

    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    auto middle = std::partition(rows.begin(), rows.end(), [&](std::size_t r) {
      return data_.features()(r, split->feature) <= split->threshold;
    });
    const auto n_left = static_cast<std::size_t>(middle - rows.begin());
    const std::uint32_t left = build(rows.first(n_left), depth + 1);
    const std::uint32_t right = build(rows.subspan(n_left), depth + 1);

    TreeNode& node = nodes_[index];
    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    node.n_rows = static_cast<std::uint32_t>(rows.size());
    node.impurity_decrease = split->impurity_decrease;
    return index;
  }

  DecisionTree finish() && {
    return DecisionTree(data_.n_classes(), data_.n_features(), std::move(nodes_), std::move(counts_));
  }

 private:
  std::uint32_t make_leaf(const NodeStats& stats) {
    TreeNode leaf;
    leaf.n_rows = static_cast<std::uint32_t>(stats.n);
    leaf.counts_offset = static_cast<std::uint32_t>(counts_.size());
    for (auto c : stats.counts) counts_.push_back(static_cast<std::uint32_t>(c));
    nodes_.push_back(leaf);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  const Dataset& data_;
  const TreeConfig& config_;
  Rng& rng_;
  std::size_t n_candidates_;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint32_t> counts_;
};

}  // namespace

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         const TreeConfig& config, Rng* rng) {
  if (rows.empty()) return std::nullopt;
  return best_split_impl(data, rows, candidate_features, config, rng, node_stats(data, rows));
}

DecisionTree::DecisionTree(std::size_t n_classes, std::size_t n_features, std::vector<TreeNode> nodes,
                           std::vector<std::uint32_t> leaf_counts)
    : n_classes_(n_classes),
      n_features_(n_features),
      nodes_(std::move(nodes)),
      leaf_counts_(std::move(leaf_counts)) {
  if (nodes_.empty()) throw Error(ErrorCode::InvalidArgument, "tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    if (node.is_leaf()) {
      if (std::size_t(node.counts_offset) + n_classes_ > leaf_counts_.size())
        throw Error(ErrorCode::InvalidArgument, "leaf counts out of range");
      std::uint64_t total = 0;
      for (auto c : counts_of(node)) total += c;
      if (total == 0) throw Error(ErrorCode::InvalidArgument, "leaf with zero counts");
    } else {
      if (node.feature < 0 || std::size_t(node.feature) >= n_features_)
        throw Error(ErrorCode::InvalidArgument, "split feature out of range");
      if (node.left <= i || node.right <= i || node.left >= nodes_.size() || node.right >= nodes_.size())
        throw Error(ErrorCode::InvalidArgument, "child index must follow its parent");
      if (!std::isfinite(node.threshold)) throw Error(ErrorCode::InvalidArgument, "non-finite threshold");
    }
  }
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes_[i].is_leaf()) depth[nodes_[i].left] = depth[nodes_[i].right] = depth[i] + 1;
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

const TreeNode& DecisionTree::route(std::span<const double> x) const noexcept {
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf())
    node = &nodes_[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
  return *node;
}

void DecisionTree::accumulate_proba(std::span<const double> x, std::span<double> out, double weight) const {
  if (x.size() != n_features_ || out.size() != n_classes_)
    throw Error(ErrorCode::DimensionMismatch, "tree input has " + std::to_string(x.size()) +
                                                  " features, expected " + std::to_string(n_features_));
  auto counts = counts_of(route(x));
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  const double scale = weight / static_cast<double>(total);
  for (std::size_t k = 0; k < n_classes_; ++k) out[k] += static_cast<double>(counts[k]) * scale;
}

std::vector<double> DecisionTree::predict_proba(std::span<const double> x) const {
  std::vector<double> out(n_classes_, 0.0);
  if (x.size() != n_features_) throw Error(ErrorCode::DimensionMismatch, "tree input dimension");
  auto counts = counts_of(route(x));
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  for (std::size_t k = 0; k < n_classes_; ++k)
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  return out;
}

DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& config,
                      Rng& rng) {
  validate(config);
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "fit_tree needs at least one row");
  const std::size_t d = data.n_features();
  const std::size_t n_candidates = config.n_candidate_features.value_or(d);
  if (n_candidates > d)
    throw Error(ErrorCode::InvalidConfig, "n_candidate_features exceeds feature count");
  std::vector<std::size_t> work(rows.begin(), rows.end());
  TreeBuilder builder(data, config, rng, n_candidates);
  builder.build(work, 0);
  return std::move(builder).finish();
}

DecisionTree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& config) {
  Rng rng(config.seed);
  return fit_tree(data, rows, config, rng);
}

std::vector<double> predict_proba_tree(const DecisionTree& tree, std::span<const double> x) {
  return tree.predict_proba(x);
}

std::vector<double> tree_feature_importance(const DecisionTree& tree, std::size_t n_training_rows) {
  std::vector<double> importance(tree.n_features(), 0.0);
  if (n_training_rows == 0) return importance;
  for (const TreeNode& node : tree.nodes()) {
    if (node.is_leaf()) continue;
    importance[static_cast<std::size_t>(node.feature)] +=
        static_cast<double>(node.n_rows) / static_cast<double>(n_training_rows) * node.impurity_decrease;
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0)
    for (double& v : importance) v /= total;
  return importance;
}

std::vector<double> tree_feature_importance(const DecisionTree& tree) {
  return tree_feature_importance(tree, tree.nodes().front().n_rows);
}

}  // namespace treenet
