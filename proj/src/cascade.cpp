#include "treenet/cascade.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "treenet/error.hpp"
#include "treenet/metrics.hpp"
#include "treenet/parallel.hpp"
#include "treenet/random.hpp"

namespace treenet {

namespace {

// Forest-slot tag used for the per-layer fold assignment stream.
constexpr std::uint64_t kFoldAssignmentSlot = ~std::uint64_t{0};

double growth_score(GrowthMetric metric, const ConfusionMatrix& cm) {
  if (metric == GrowthMetric::accuracy) return accuracy(cm);
  return evaluate(cm).f1.weighted;
}

}  // namespace

void validate(const CascadeConfig& config) {
  if (config.forests_per_layer < 1) throw Error(ErrorCode::InvalidConfig, "forests_per_layer must be >= 1");
  if (config.trees_per_forest < 1) throw Error(ErrorCode::InvalidConfig, "trees_per_forest must be >= 1");
  if (config.k_folds < 2) throw Error(ErrorCode::InvalidConfig, "k_folds must be >= 2");
  if (config.max_layers < 1) throw Error(ErrorCode::InvalidConfig, "max_layers must be >= 1");
  if (!(config.improvement_tolerance >= 0.0) || !std::isfinite(config.improvement_tolerance))
    throw Error(ErrorCode::InvalidConfig, "improvement_tolerance must be a finite value >= 0");
  if (config.min_samples_leaf < 1) throw Error(ErrorCode::InvalidConfig, "min_samples_leaf must be >= 1");
}

ForestKind forest_kind_for_slot(std::size_t index) noexcept {
  return index % 2 == 0 ? ForestKind::bagged : ForestKind::extra;
}

ClassId argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return static_cast<ClassId>(best);
}

std::vector<double> augment(std::span<const double> x, std::span<const std::vector<double>> layer_probs) {
  std::vector<double> out(x.begin(), x.end());
  if (layer_probs.empty()) return out;
  const std::size_t c = layer_probs.front().size();
  out.reserve(x.size() + layer_probs.size() * c);
  for (const auto& p : layer_probs) {
    if (p.size() != c) throw Error(ErrorCode::DimensionMismatch, "probability vectors differ in length");
    double sum = 0.0;
    for (double v : p) sum += v;
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "probability vector does not sum to 1");
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::uint32_t> stratified_folds(std::span<const ClassId> labels, std::size_t n_classes,
                                            std::size_t k_folds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> groups(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) groups.at(labels[i]).push_back(i);
  std::vector<std::uint32_t> fold(labels.size(), 0);
  for (std::size_t k = 0; k < n_classes; ++k) {
    Rng rng(derive_seed(seed, {k}));
    rng.shuffle(groups[k]);
    for (std::size_t i = 0; i < groups[k].size(); ++i)
      fold[groups[k][i]] = static_cast<std::uint32_t>(i % k_folds);
  }
  return fold;
}

CascadeModel fit_cascade(const Dataset& train, const CascadeConfig& config, const FitOptions& options) {
  validate(config);
  const std::size_t n = train.size();
  const std::size_t d = train.n_features();
  const std::size_t n_classes = train.n_classes();
  const std::size_t n_forests = config.forests_per_layer;
  const std::size_t k_folds = config.k_folds;

  const auto counts = train.class_counts();
  std::size_t present = 0;
  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (auto c : counts) {
    if (c == 0) continue;
    ++present;
    smallest = std::min(smallest, c);
  }
  if (present < 2) throw Error(ErrorCode::DegenerateTraining, "training data contains a single class");
  if (k_folds > smallest)
    throw Error(ErrorCode::KFoldsTooLarge, "k_folds = " + std::to_string(k_folds) +
                                               " exceeds the smallest class count " + std::to_string(smallest));

  TreeConfig tree_config;
  tree_config.max_depth = config.max_depth;
  tree_config.min_samples_leaf = config.min_samples_leaf;

  CascadeModel model;
  model.n_classes = n_classes;
  model.input_dim = d;
  model.config = config;
  model.class_names = train.class_names();

  std::vector<LayerModel> grown;
  // previous layer's out-of-fold distributions: [forest][row * C + k]
  std::vector<std::vector<double>> previous_oof;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t best_layer = 0;
  std::size_t stale = 0;

  for (std::size_t layer = 0; layer < config.max_layers; ++layer) {
    const auto started = std::chrono::steady_clock::now();

    // Representation: raw features, plus the previous layer's OOF outputs.
    const std::size_t width = layer == 0 ? d : d + n_forests * n_classes;
    Matrix representation(n, width);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = representation.row(i);
      auto src = train.row(i);
      std::copy(src.begin(), src.end(), dst.begin());
      if (layer > 0) {
        for (std::size_t f = 0; f < n_forests; ++f)
          std::copy_n(previous_oof[f].begin() + static_cast<std::ptrdiff_t>(i * n_classes), n_classes,
                      dst.begin() + static_cast<std::ptrdiff_t>(d + f * n_classes));
      }
    }
    std::vector<std::string> names = train.feature_names();
    for (std::size_t f = 0; layer > 0 && f < n_forests; ++f)
      for (std::size_t k = 0; k < n_classes; ++k)
        names.push_back("l" + std::to_string(layer - 1) + "_f" + std::to_string(f) + "_p" + std::to_string(k));
    const Dataset layer_data(std::move(representation), train.labels(), train.class_names(), std::move(names));

    const auto fold_of_row = stratified_folds(train.labels(), n_classes, k_folds,
                                              derive_seed(config.seed, {layer, kFoldAssignmentSlot}));
    std::vector<std::vector<std::size_t>> fold_train(k_folds), fold_test(k_folds);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k_folds; ++j) (fold_of_row[i] == j ? fold_test[j] : fold_train[j]).push_back(i);
    std::vector<std::size_t> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;

    std::vector<std::vector<double>> oof(n_forests, std::vector<double>(n * n_classes, 0.0));
    std::vector<ForestModel> refit(n_forests);

    // Task (f, j): j < k_folds fits fold j and predicts its held-out rows;
    // j == k_folds refits on every row. Each task writes disjoint slots.
    const std::size_t tasks = n_forests * (k_folds + 1);
    parallel_for(tasks, options.n_threads, [&](std::size_t task) {
      const std::size_t f = task / (k_folds + 1);
      const std::size_t j = task % (k_folds + 1);
      const auto forest_config = make_forest_config(forest_kind_for_slot(f), config.trees_per_forest,
                                                    derive_seed(config.seed, {layer, f, j}), tree_config);
      if (j == k_folds) {
        refit[f] = fit_forest(layer_data, all_rows, forest_config, 1);
        return;
      }
      const ForestModel fold_model = fit_forest(layer_data, fold_train[j], forest_config, 1);
      for (std::size_t i : fold_test[j]) {
        std::span<double> out(oof[f].data() + i * n_classes, n_classes);
        predict_proba_forest(fold_model, layer_data.row(i), out);
      }
    });

    std::vector<ClassId> predicted(n);
    std::vector<double> mean(n_classes);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::size_t f = 0; f < n_forests; ++f)
        for (std::size_t k = 0; k < n_classes; ++k) mean[k] += oof[f][i * n_classes + k];
      predicted[i] = argmax(mean);
    }
    const double metric =
        growth_score(config.growth_metric, confusion(train.labels(), predicted, n_classes));

    if (options.trace) {
      LayerTrace lt;
      lt.fold_of_row = fold_of_row;
      lt.fold_training_rows.assign(n_forests, fold_train);
      lt.oof_source_fold.assign(n_forests, fold_of_row);
      lt.oof_probabilities = oof;
      lt.representation = layer_data.features();
      options.trace->layers.push_back(std::move(lt));
    }

    LayerModel layer_model;
    layer_model.forests = std::move(refit);
    layer_model.layer_index = layer;
    layer_model.input_dim = width;
    layer_model.validation_metric = metric;
    layer_model.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    grown.push_back(std::move(layer_model));
    model.history.candidate_metrics.push_back(metric);

    if (metric > best_metric + config.improvement_tolerance) {
      best_metric = metric;
      best_layer = layer;
      stale = 0;
    } else {
      ++stale;
    }
    // patience 0 behaves like 1: the first non-improving layer ends growth.
    if (stale > 0 && stale >= config.patience) break;
    // No later layer can beat the best by more than the tolerance.
    if (best_metric + config.improvement_tolerance >= 1.0) break;
    previous_oof = std::move(oof);
  }

  grown.resize(best_layer + 1);
  model.layers = std::move(grown);
  model.history.best_layer = best_layer;
  return model;
}

std::vector<double> predict_proba_cascade(const CascadeModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.input_dim) +
                                                  " features, got " + std::to_string(x.size()));
  if (model.layers.empty()) throw Error(ErrorCode::InvalidArgument, "model has no layers");
  const std::size_t c = model.n_classes;
  const std::size_t n_forests = model.config.forests_per_layer;

  std::vector<double> input(x.begin(), x.end());
  std::vector<double> outputs(n_forests * c);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    for (std::size_t f = 0; f < layer.forests.size(); ++f)
      predict_proba_forest(layer.forests[f], input, std::span<double>(outputs.data() + f * c, c));
    if (l + 1 < model.layers.size()) {
      input.resize(model.input_dim);
      input.insert(input.end(), outputs.begin(), outputs.end());
    }
  }
  std::vector<double> mean(c, 0.0);
  const auto& last = model.layers.back();
  for (std::size_t f = 0; f < last.forests.size(); ++f)
    for (std::size_t k = 0; k < c; ++k) mean[k] += outputs[f * c + k];
  for (double& p : mean) p /= static_cast<double>(last.forests.size());
  return mean;
}

ClassId predict(const CascadeModel& model, std::span<const double> x) {
  return argmax(predict_proba_cascade(model, x));
}

std::vector<ClassId> predict_all(const CascadeModel& model, const Matrix& features) {
  std::vector<ClassId> out;
  out.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out.push_back(predict(model, features.row(i)));
  return out;
}

}  // namespace treenet
