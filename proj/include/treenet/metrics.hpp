#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "treenet/dataset.hpp"

namespace treenet {

/// C x C counts; rows are the actual class, columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes)
      : n_classes_(n_classes), counts_(n_classes * n_classes, 0) {}
  ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> counts);

  std::size_t n_classes() const noexcept { return n_classes_; }
  std::uint64_t at(std::size_t actual, std::size_t predicted) const noexcept {
    return counts_[actual * n_classes_ + predicted];
  }
  void add(std::size_t actual, std::size_t predicted, std::uint64_t count = 1) {
    counts_[actual * n_classes_ + predicted] += count;
  }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  std::uint64_t total() const noexcept;
  std::uint64_t true_positives(std::size_t k) const noexcept { return at(k, k); }
  std::uint64_t false_positives(std::size_t k) const noexcept;
  std::uint64_t false_negatives(std::size_t k) const noexcept;
  std::uint64_t true_negatives(std::size_t k) const noexcept;
  /// Row sums: samples whose actual class is k.
  std::vector<std::uint64_t> support() const;
  /// Column sums: samples predicted as k.
  std::vector<std::uint64_t> predicted_totals() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_classes_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                          std::size_t n_classes);

double accuracy(const ConfusionMatrix& cm);

struct PrecisionRecall {
  std::vector<double> precision;
  std::vector<double> recall;
};

/// Per-class TP/(TP+FP) and TP/(TP+FN); a zero denominator gives 0.
PrecisionRecall precision_recall_per_class(const ConfusionMatrix& cm);

/// (1 + b^2) P R / (b^2 P + R), or 0 when the denominator is 0.
double f_beta(double precision, double recall, double beta = 1.0);

enum class Averaging { macro, weighted };

double aggregate(std::span<const double> per_class, std::span<const std::uint64_t> support,
                 Averaging mode);

/// Multiclass Matthews correlation (covariance form). Reduces to
/// (TP TN - FP FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)) for two classes.
/// A zero denominator gives 0.
double mcc(const ConfusionMatrix& cm);

struct ClassScores {
  std::vector<double> per_class;
  double macro = 0.0;
  double weighted = 0.0;

  bool operator==(const ClassScores&) const = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  ClassScores precision;
  ClassScores recall;
  ClassScores f1;
  double mcc = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport evaluate(const ConfusionMatrix& cm);
MetricsReport evaluate(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                       std::size_t n_classes);

}  // namespace treenet
