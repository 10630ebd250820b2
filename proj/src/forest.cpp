#include "treenet/forest.hpp"

#include <algorithm>
#include <cmath>

#include "treenet/error.hpp"
#include "treenet/parallel.hpp"
#include "treenet/random.hpp"

namespace treenet {

ForestConfig make_forest_config(ForestKind kind, std::size_t n_trees, std::uint64_t seed, TreeConfig tree) {
  tree.split_mode = kind == ForestKind::bagged ? SplitMode::exhaustive : SplitMode::random_threshold;
  return ForestConfig{n_trees, kind, tree, seed};
}

void validate(const ForestConfig& config) {
  if (config.n_trees < 1) throw Error(ErrorCode::InvalidConfig, "n_trees must be >= 1");
  const SplitMode expected =
      config.kind == ForestKind::bagged ? SplitMode::exhaustive : SplitMode::random_threshold;
  if (config.tree.split_mode != expected)
    throw Error(ErrorCode::InvalidConfig, "split mode does not match forest kind");
  validate(config.tree);
}

std::size_t default_candidate_features(std::size_t d) {
  auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  while (m * m < d) ++m;
  while (m > 1 && (m - 1) * (m - 1) >= d) --m;
  return std::max<std::size_t>(1, m);
}

ForestModel fit_forest(const Dataset& data, std::span<const std::size_t> rows, const ForestConfig& config,
                       std::size_t n_threads) {
  validate(config);
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "fit_forest needs at least one row");

  TreeConfig tree_config = config.tree;
  if (!tree_config.n_candidate_features)
    tree_config.n_candidate_features = default_candidate_features(data.n_features());
  tree_config.n_candidate_features = std::min(*tree_config.n_candidate_features, data.n_features());

  ForestModel model;
  model.config = config;
  model.n_classes = data.n_classes();
  model.input_dim = data.n_features();
  model.trees.resize(config.n_trees);

  parallel_for(config.n_trees, n_threads, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, {t}));
    if (config.kind == ForestKind::bagged) {
      std::vector<std::size_t> sample(rows.size());
      for (auto& r : sample) r = rows[static_cast<std::size_t>(rng.uniform_index(rows.size()))];
      model.trees[t] = fit_tree(data, sample, tree_config, rng);
    } else {
      model.trees[t] = fit_tree(data, rows, tree_config, rng);
    }
  });
  return model;
}

void predict_proba_forest(const ForestModel& model, std::span<const double> x, std::span<double> out) {
  if (x.size() != model.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "forest expects " + std::to_string(model.input_dim) +
                                                  " features, got " + std::to_string(x.size()));
  if (out.size() != model.n_classes) throw Error(ErrorCode::DimensionMismatch, "output size");
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& tree : model.trees) tree.accumulate_proba(x, out);
  const double n = static_cast<double>(model.trees.size());
  for (double& p : out) p /= n;
}

std::vector<double> predict_proba_forest(const ForestModel& model, std::span<const double> x) {
  std::vector<double> out(model.n_classes, 0.0);
  predict_proba_forest(model, x, out);
  return out;
}

std::vector<double> forest_feature_importance(const ForestModel& model) {
  std::vector<double> mean(model.input_dim, 0.0);
  if (model.trees.empty()) return mean;
  for (const auto& tree : model.trees) {
    auto imp = tree_feature_importance(tree);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += imp[j];
  }
  for (double& v : mean) v /= static_cast<double>(model.trees.size());
  // Trees that never split contribute zeros; rescale so the result still
  // sums to 1 whenever any tree split.
  double total = 0.0;
  for (double v : mean) total += v;
  if (total > 0.0)
    for (double& v : mean) v /= total;
  return mean;
}

}  // namespace treenet
