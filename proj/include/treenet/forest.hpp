#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "treenet/dataset.hpp"
#include "treenet/tree.hpp"

namespace treenet {

/// bagged: bootstrap rows + exhaustive splits (random forest).
/// extra: all rows + random thresholds (extremely randomized trees).
enum class ForestKind { bagged, extra };

struct ForestConfig {
  std::size_t n_trees = 50;
  ForestKind kind = ForestKind::bagged;
  TreeConfig tree;
  std::uint64_t seed = 0;

  bool operator==(const ForestConfig&) const = default;
};

/// Config for `kind` with the matching split mode and the given seed.
ForestConfig make_forest_config(ForestKind kind, std::size_t n_trees, std::uint64_t seed,
                                TreeConfig tree = {});

/// Throws InvalidConfig for n_trees == 0 or a split mode that does not
/// match the kind.
void validate(const ForestConfig& config);

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  std::size_t n_classes = 0;
  std::size_t input_dim = 0;

  bool operator==(const ForestModel&) const = default;
};

/// ceil(sqrt(d)).
std::size_t default_candidate_features(std::size_t d);

/// Tree t draws all of its randomness (bootstrap, then node features and
/// thresholds) from derive_seed(config.seed, {t}), so the result does not
/// depend on n_threads.
ForestModel fit_forest(const Dataset& data, std::span<const std::size_t> rows,
                       const ForestConfig& config, std::size_t n_threads = 1);

/// Unweighted mean of the per-tree class distributions.
std::vector<double> predict_proba_forest(const ForestModel& model, std::span<const double> x);

/// Writes the mean distribution into out (size n_classes).
void predict_proba_forest(const ForestModel& model, std::span<const double> x, std::span<double> out);

/// Mean of the per-tree normalized importances, rescaled to sum 1 when any
/// tree split (zero vector otherwise).
std::vector<double> forest_feature_importance(const ForestModel& model);

}  // namespace treenet
