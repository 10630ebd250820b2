#include "treenet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treenet/error.hpp"

namespace treenet {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> counts)
    : n_classes_(n_classes), counts_(std::move(counts)) {
  if (counts_.size() != n_classes_ * n_classes_)
    throw Error(ErrorCode::DimensionMismatch, "confusion matrix storage does not match C x C");
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::false_positives(std::size_t k) const noexcept {
  std::uint64_t column = 0;
  for (std::size_t a = 0; a < n_classes_; ++a) column += at(a, k);
  return column - at(k, k);
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t k) const noexcept {
  std::uint64_t row = 0;
  for (std::size_t p = 0; p < n_classes_; ++p) row += at(k, p);
  return row - at(k, k);
}

std::uint64_t ConfusionMatrix::true_negatives(std::size_t k) const noexcept {
  return total() - true_positives(k) - false_positives(k) - false_negatives(k);
}

std::vector<std::uint64_t> ConfusionMatrix::support() const {
  std::vector<std::uint64_t> rows(n_classes_, 0);
  for (std::size_t a = 0; a < n_classes_; ++a)
    for (std::size_t p = 0; p < n_classes_; ++p) rows[a] += at(a, p);
  return rows;
}

std::vector<std::uint64_t> ConfusionMatrix::predicted_totals() const {
  std::vector<std::uint64_t> cols(n_classes_, 0);
  for (std::size_t a = 0; a < n_classes_; ++a)
    for (std::size_t p = 0; p < n_classes_; ++p) cols[p] += at(a, p);
  return cols;
}

ConfusionMatrix confusion(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                          std::size_t n_classes) {
  if (y_true.size() != y_pred.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(y_true.size()) + " labels vs " +
                                               std::to_string(y_pred.size()) + " predictions");
  if (y_true.empty()) throw Error(ErrorCode::LengthMismatch, "no samples to score");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= n_classes || y_pred[i] >= n_classes)
      throw Error(ErrorCode::LabelOutOfRange, "sample " + std::to_string(i));
    cm.add(y_true[i], y_pred[i]);
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  std::uint64_t trace = 0;
  for (std::size_t k = 0; k < cm.n_classes(); ++k) trace += cm.at(k, k);
  const std::uint64_t total = cm.total();
  return total == 0 ? 0.0 : static_cast<double>(trace) / static_cast<double>(total);
}

namespace {

double safe_ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PrecisionRecall precision_recall_per_class(const ConfusionMatrix& cm) {
  const auto support = cm.support();
  const auto predicted = cm.predicted_totals();
  PrecisionRecall pr;
  for (std::size_t k = 0; k < cm.n_classes(); ++k) {
    pr.precision.push_back(safe_ratio(cm.at(k, k), predicted[k]));
    pr.recall.push_back(safe_ratio(cm.at(k, k), support[k]));
  }
  return pr;
}

double f_beta(double precision, double recall, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  const double b2 = beta * beta;
  const double den = b2 * precision + recall;
  if (den == 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / den;
}

double aggregate(std::span<const double> per_class, std::span<const std::uint64_t> support,
                 Averaging mode) {
  if (per_class.size() != support.size())
    throw Error(ErrorCode::LengthMismatch, "per-class values and support differ in length");
  if (per_class.empty()) return 0.0;
  if (mode == Averaging::macro) {
    return std::accumulate(per_class.begin(), per_class.end(), 0.0) /
           static_cast<double>(per_class.size());
  }
  const std::uint64_t total = std::accumulate(support.begin(), support.end(), std::uint64_t{0});
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < per_class.size(); ++k)
    sum += static_cast<double>(support[k]) * per_class[k];
  return sum / static_cast<double>(total);
}

double mcc(const ConfusionMatrix& cm) {
  // cov(y, yhat) ~ trace * n - sum_k p_k t_k, var terms n^2 - sum_k p_k^2 and
  // n^2 - sum_k t_k^2, all exact in 128-bit integers.
  using i128 = __int128;
  const auto t = cm.support();
  const auto p = cm.predicted_totals();
  const i128 n = static_cast<i128>(cm.total());
  i128 trace = 0, pt = 0, pp = 0, tt = 0;
  for (std::size_t k = 0; k < cm.n_classes(); ++k) {
    trace += cm.at(k, k);
    pt += static_cast<i128>(p[k]) * t[k];
    pp += static_cast<i128>(p[k]) * p[k];
    tt += static_cast<i128>(t[k]) * t[k];
  }
  const i128 cov = trace * n - pt;
  const i128 var_pred = n * n - pp;
  const i128 var_true = n * n - tt;
  if (var_pred == 0 || var_true == 0) return 0.0;
  // Single rounding of the product keeps the binary case bit-identical to the
  // closed form; fall back to floating point when it would overflow.
  double den;
  constexpr i128 kLimit = static_cast<i128>(1) << 62;
  if (var_pred < kLimit && var_true < kLimit)
    den = std::sqrt(static_cast<double>(var_pred * var_true));
  else
    den = std::sqrt(static_cast<double>(var_pred)) * std::sqrt(static_cast<double>(var_true));
  return std::clamp(static_cast<double>(cov) / den, -1.0, 1.0);
}

namespace {

ClassScores summarize(std::vector<double> per_class, const std::vector<std::uint64_t>& support) {
  ClassScores s;
  s.macro = aggregate(per_class, support, Averaging::macro);
  s.weighted = aggregate(per_class, support, Averaging::weighted);
  s.per_class = std::move(per_class);
  return s;
}

}  // namespace

MetricsReport evaluate(const ConfusionMatrix& cm) {
  const auto support = cm.support();
  auto pr = precision_recall_per_class(cm);
  std::vector<double> f1(cm.n_classes());
  for (std::size_t k = 0; k < f1.size(); ++k) f1[k] = f_beta(pr.precision[k], pr.recall[k], 1.0);
  MetricsReport report;
  report.accuracy = accuracy(cm);
  report.precision = summarize(std::move(pr.precision), support);
  report.recall = summarize(std::move(pr.recall), support);
  report.f1 = summarize(std::move(f1), support);
  report.mcc = mcc(cm);
  return report;
}

MetricsReport evaluate(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                       std::size_t n_classes) {
  return evaluate(confusion(y_true, y_pred, n_classes));
}

}  // namespace treenet
