#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace treenet {

using ClassId = std::uint32_t;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Labeled feature matrix. Validated on construction: row/label counts
/// agree, d >= 1, C >= 2, labels index class_names, all features finite.
class Dataset {
 public:
  Dataset(Matrix features, std::vector<ClassId> labels, std::vector<std::string> class_names,
          std::vector<std::string> feature_names);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t n_features() const noexcept { return features_.cols(); }
  std::size_t n_classes() const noexcept { return class_names_.size(); }

  const Matrix& features() const noexcept { return features_; }
  std::span<const double> row(std::size_t i) const noexcept { return features_.row(i); }
  const std::vector<ClassId>& labels() const noexcept { return labels_; }
  ClassId label(std::size_t i) const noexcept { return labels_[i]; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  /// Number of rows per class id.
  std::vector<std::size_t> class_counts() const;

  /// New dataset with the given rows, in the given order. Class names are
  /// kept even for classes with no remaining rows.
  Dataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;

 private:
  Matrix features_;
  std::vector<ClassId> labels_;
  std::vector<std::string> class_names_;
  std::vector<std::string> feature_names_;
};

struct ChunkSpec {
  double fraction = 1.0;  // (0, 1]
  std::uint64_t seed = 0;
};

/// Raw CSV contents: numeric feature columns plus, when present, the label
/// column as strings.
struct CsvTable {
  Matrix features;
  std::vector<std::string> feature_names;
  std::vector<std::string> labels;
  bool has_labels = false;
};

/// Parses the CSV schema without assigning class ids. With label_required
/// false a missing label column is allowed and every column is a feature.
CsvTable read_csv_table(const std::filesystem::path& path, const std::string& label_column = "label",
                        bool label_required = true);

/// Reads a headered CSV. Labels become dense ids in first-appearance order.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column = "label");

/// Writes the schema load_csv reads: feature columns, then the label column.
void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               const std::string& label_column = "label");

/// Per-class sample size used by the chunk sampler and the split:
/// max(1, round(fraction * class_size)), rounding half away from zero.
std::size_t stratified_count(double fraction, std::size_t class_size);

/// Row indices selected by stratified_chunk, ascending.
std::vector<std::size_t> stratified_chunk_indices(std::span<const ClassId> labels,
                                                  std::size_t n_classes, const ChunkSpec& spec);

/// Stratified subsample keeping max(1, round(f * n_c)) rows of every class.
/// Rows keep their original relative order.
Dataset stratified_chunk(const Dataset& dataset, const ChunkSpec& spec);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

SplitIndices stratified_split_indices(std::span<const ClassId> labels, std::size_t n_classes,
                                      double test_fraction, std::uint64_t seed);

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed);

/// Gaussian blobs: class k is centered at 4k on coordinate (k mod d) and 0
/// elsewhere, with isotropic noise of standard deviation `spread`. Rows are
/// grouped by class.
Dataset make_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t d, double spread,
                   std::uint64_t seed);

/// Center used by make_blobs for class k.
std::vector<double> blob_center(std::size_t k, std::size_t d);

}  // namespace treenet
