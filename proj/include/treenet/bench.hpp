#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "treenet/cascade.hpp"
#include "treenet/dataset.hpp"
#include "treenet/metrics.hpp"

namespace treenet {

inline constexpr int kExperimentFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

struct BlobsSpec {
  std::size_t n_classes = 10;
  std::size_t n_per_class = 100;
  std::size_t d = 20;
  double spread = 1.0;
  std::uint64_t seed = 0;

  bool operator==(const BlobsSpec&) const = default;
};

struct DataSource {
  enum class Kind { csv, images, blobs };
  Kind kind = Kind::blobs;
  std::filesystem::path path;  // csv file or image root
  std::string label_column = "label";
  BlobsSpec blobs;

  bool operator==(const DataSource&) const = default;
};

/// Data-usage rows of the sweep.
inline const std::vector<double> kDefaultFractions = {0.05, 0.10, 0.40, 0.50, 0.90, 1.0};

struct ExperimentConfig {
  DataSource source;
  std::vector<double> fractions = kDefaultFractions;
  double test_fraction = 0.2;
  std::size_t repeats = 3;
  std::size_t fps_repeats = 3;
  CascadeConfig cascade;
  std::uint64_t seed = 0;
  std::filesystem::path output;  // report stem; empty = do not write
  std::size_t n_threads = 1;     // training only; FPS is always single-threaded

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws InvalidConfig unless fractions are nonempty, ascending and in
/// (0, 1], test_fraction is in (0, 1) and repeats >= 1.
void validate(const ExperimentConfig& config);

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunRecord {
  double chunk = 1.0;
  std::size_t repeat = 0;
  std::size_t size = 0;  // training rows used
  double train_seconds = 0.0;
  MetricsReport metrics;
  double fps = 0.0;
  std::size_t layers = 0;
  std::size_t k_folds = 0;  // folds actually used for this cell
  std::vector<std::size_t> train_rows;  // indices into the loaded dataset

  bool operator==(const RunRecord&) const = default;
};

/// Per-fraction medians over repeats.
struct FractionSummary {
  double chunk = 1.0;
  double size = 0.0;
  double train_seconds = 0.0;
  double accuracy = 0.0;
  double precision_weighted = 0.0;
  double recall_weighted = 0.0;
  double f1_weighted = 0.0;
  double mcc = 0.0;
  double fps = 0.0;

  bool operator==(const FractionSummary&) const = default;
};

struct RunReport {
  std::size_t dataset_size = 0;
  std::size_t n_classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::size_t> test_rows;  // fixed for the whole run
  std::vector<RunRecord> runs;         // fraction-major, then repeat
  std::vector<FractionSummary> summary;

  bool operator==(const RunReport&) const = default;
};

Dataset load_source(const DataSource& source);

/// Runs the sweep on an already loaded dataset.
RunReport run_experiment(const ExperimentConfig& config, const Dataset& data);

/// Loads config.source, runs the sweep and, when config.output is set,
/// emits the report next to it.
RunReport run_experiment(const ExperimentConfig& config);

std::vector<FractionSummary> summarize(std::span<const RunRecord> runs);

double median(std::vector<double> values);

struct FpsMeasurement {
  double warmup_seconds = 0.0;
  std::vector<double> pass_fps;
  double median_fps = 0.0;
};

/// One untimed warm-up pass, then `repeats` timed passes of sequential
/// single-sample predictions over every probe row.
FpsMeasurement measure_fps_detailed(const CascadeModel& model, const Matrix& probe, std::size_t repeats);
double measure_fps(const CascadeModel& model, const Dataset& probe, std::size_t repeats);

/// L (N^2 + 2N).
std::uint64_t nn_inference_cost(std::uint64_t layers, std::uint64_t neurons);
/// e (D / B) (2L (N^2 + 2N) + L N^2), with D / B a real quotient.
double nn_training_cost(std::uint64_t epochs, std::uint64_t dataset_size, std::uint64_t batch_size,
                        std::uint64_t layers, std::uint64_t neurons);

struct NnFlops {
  std::uint64_t forward = 0;  // sum_l n_{l-1} n_l
  std::uint64_t total = 0;    // 2 E forward
  bool operator==(const NnFlops&) const = default;
};
NnFlops nn_flops(std::span<const std::uint64_t> widths, std::uint64_t epochs);

inline const char* kReportTableHeader =
    "chunk,size,train_seconds,accuracy,precision_weighted,recall_weighted,f1_weighted,mcc,fps";

nlohmann::ordered_json to_json(const MetricsReport& metrics);
MetricsReport metrics_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunReport& report);
RunReport run_report_from_json(const nlohmann::json& doc);

struct ReportPaths {
  std::filesystem::path document;  // <stem>.json
  std::filesystem::path table;     // <stem>.csv
};
ReportPaths report_paths(const std::filesystem::path& stem);

/// Writes the full report document and the flat per-run table.
ReportPaths emit_report(const RunReport& report, const std::filesystem::path& stem);
RunReport load_report(const std::filesystem::path& document);

}  // namespace treenet
