#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treenet/dataset.hpp"
#include "treenet/forest.hpp"

namespace treenet {

enum class GrowthMetric { weighted_f1, accuracy };

struct CascadeConfig {
  std::size_t forests_per_layer = 4;  // even slots bagged, odd slots extra
  std::size_t trees_per_forest = 50;
  std::size_t k_folds = 3;
  std::size_t max_layers = 20;
  std::size_t patience = 2;
  double improvement_tolerance = 1e-4;
  GrowthMetric growth_metric = GrowthMetric::weighted_f1;
  std::uint64_t seed = 0;
  // Per-tree limits shared by every forest.
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 1;

  bool operator==(const CascadeConfig&) const = default;
};

void validate(const CascadeConfig& config);

/// Kind of forest slot `index` within a layer.
ForestKind forest_kind_for_slot(std::size_t index) noexcept;

struct LayerModel {
  std::vector<ForestModel> forests;
  std::size_t layer_index = 0;
  std::size_t input_dim = 0;
  double validation_metric = 0.0;
  double train_seconds = 0.0;  // wall clock; not serialized
};

struct CascadeHistory {
  /// Validation metric of every layer that was grown, including the ones
  /// dropped by truncation.
  std::vector<double> candidate_metrics;
  std::size_t best_layer = 0;
};

struct CascadeModel {
  std::vector<LayerModel> layers;
  std::size_t n_classes = 0;
  std::size_t input_dim = 0;
  CascadeConfig config;
  CascadeHistory history;
  std::vector<std::string> class_names;

  std::size_t augmented_dim() const noexcept {
    return input_dim + config.forests_per_layer * n_classes;
  }
};

/// Fold bookkeeping captured during fit, for auditing out-of-fold hygiene.
struct LayerTrace {
  std::vector<std::uint32_t> fold_of_row;
  /// fold_training_rows[forest][fold]: rows handed to the fold model.
  std::vector<std::vector<std::vector<std::size_t>>> fold_training_rows;
  /// oof_source_fold[forest][row]: fold model that produced the row's
  /// out-of-fold distribution.
  std::vector<std::vector<std::uint32_t>> oof_source_fold;
  /// oof_probabilities[forest]: n x C, row-major.
  std::vector<std::vector<double>> oof_probabilities;
  /// Features the layer was trained on (n x input_dim).
  Matrix representation;
};

struct CascadeTrace {
  std::vector<LayerTrace> layers;
};

struct FitOptions {
  std::size_t n_threads = 1;  // 0 = hardware concurrency
  CascadeTrace* trace = nullptr;
};

/// [x ; p_1 ; ... ; p_K]. Each p_i must have the same length and sum to 1
/// within 1e-9.
std::vector<double> augment(std::span<const double> x, std::span<const std::vector<double>> layer_probs);

/// Stratified k-fold assignment: rows of each class are shuffled with
/// `seed` and dealt round-robin over the folds.
std::vector<std::uint32_t> stratified_folds(std::span<const ClassId> labels, std::size_t n_classes,
                                            std::size_t k_folds, std::uint64_t seed);

/// Grows the cascade layer by layer with out-of-fold augmentation and
/// early stopping on the validation metric; stored layers are truncated at
/// the best layer. Deterministic for any n_threads.
CascadeModel fit_cascade(const Dataset& train, const CascadeConfig& config, const FitOptions& options = {});

/// Class distribution after the last layer: mean of its forests' outputs.
std::vector<double> predict_proba_cascade(const CascadeModel& model, std::span<const double> x);

/// Argmax of predict_proba_cascade; ties go to the lowest class id.
ClassId predict(const CascadeModel& model, std::span<const double> x);

std::vector<ClassId> predict_all(const CascadeModel& model, const Matrix& features);

/// Lowest index of the maximum.
ClassId argmax(std::span<const double> values);

}  // namespace treenet
