#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "treenet/error.hpp"
#include "treenet/metrics.hpp"
#include "treenet/random.hpp"

using namespace treenet;

namespace {

ConfusionMatrix cm2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return ConfusionMatrix(2, {a, b, c, d});
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

struct Labels {
  std::vector<ClassId> t, p;
  std::size_t c;
};

Labels random_labels(Rng& rng, std::size_t max_c = 6, std::size_t max_n = 500) {
  Labels l;
  l.c = 2 + rng.uniform_index(max_c - 1);
  const std::size_t n = 1 + rng.uniform_index(max_n);
  // Mix of random and mostly-correct predictions.
  const double noise = rng.uniform01();
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<ClassId>(rng.uniform_index(l.c));
    l.t.push_back(y);
    l.p.push_back(rng.uniform01() < noise ? static_cast<ClassId>(rng.uniform_index(l.c)) : y);
  }
  return l;
}

}  // namespace

TEST_CASE("confusion") {
  const std::vector<ClassId> a{0, 1}, b{1, 1}, zeros{0, 0};
  CHECK(confusion(a, a, 2) == cm2(1, 0, 0, 1));
  CHECK(confusion(zeros, b, 2).at(0, 1) == 2);
  CHECK(code_of([&] { confusion(a, std::vector<ClassId>{0}, 2); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([&] { confusion(std::vector<ClassId>{}, std::vector<ClassId>{}, 2); }) ==
        ErrorCode::LengthMismatch);
  CHECK(code_of([&] { confusion(a, std::vector<ClassId>{0, 2}, 2); }) == ErrorCode::LabelOutOfRange);

  Rng rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    const Labels l = random_labels(rng, 5, 40);
    const ConfusionMatrix cm = confusion(l.t, l.p, l.c);
    const auto want = oracle::count_pairs(l.t, l.p, static_cast<int>(l.c));
    for (std::size_t i = 0; i < l.c; ++i)
      for (std::size_t j = 0; j < l.c; ++j) CHECK(cm.at(i, j) == want[i][j]);
  }
}

TEST_CASE("confusion cells") {
  const ConfusionMatrix cm(3, {5, 1, 0, 2, 3, 1, 0, 4, 6});
  CHECK(cm.total() == 22);
  CHECK(cm.true_positives(1) == 3);
  CHECK(cm.false_positives(1) == 5);
  CHECK(cm.false_negatives(1) == 3);
  CHECK(cm.true_negatives(1) == 11);
  CHECK(cm.support() == std::vector<std::uint64_t>{6, 6, 10});
  CHECK(cm.predicted_totals() == std::vector<std::uint64_t>{7, 8, 7});
}

TEST_CASE("accuracy") {
  CHECK(accuracy(cm2(3, 0, 0, 4)) == 1.0);
  CHECK(accuracy(cm2(0, 3, 4, 0)) == 0.0);
  CHECK(accuracy(cm2(2, 1, 1, 2)) == doctest::Approx(4.0 / 6).epsilon(1e-15));
}

TEST_CASE("precision and recall") {
  const auto perfect = precision_recall_per_class(cm2(3, 0, 0, 4));
  CHECK(perfect.precision == std::vector<double>{1, 1});
  CHECK(perfect.recall == std::vector<double>{1, 1});

  const auto never = precision_recall_per_class(cm2(3, 0, 2, 0));
  CHECK(never.precision[1] == 0.0);
  CHECK(never.recall[1] == 0.0);

  const auto pr = precision_recall_per_class(cm2(2, 1, 1, 2));
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(pr.precision[k] == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(pr.recall[k] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  }
}

TEST_CASE("f_beta") {
  CHECK(f_beta(0.5, 0.5) == 0.5);
  CHECK(f_beta(1.0, 0.0) == 0.0);
  CHECK(f_beta(0.0, 0.0) == 0.0);
  CHECK(f_beta(0.8, 0.4, 2.0) == doctest::Approx(1.6 / 3.6).epsilon(1e-15));
  CHECK(code_of([] { f_beta(0.5, 0.5, 0.0); }) == ErrorCode::InvalidArgument);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform01(), r = rng.uniform01();
    CHECK(f_beta(p, r) == f_beta(r, p));
  }
}

TEST_CASE("aggregate") {
  const std::vector<double> v{0.3, 0.7}, v3{0.5, 1.0, 0.0}, one_zero{1.0, 0.0};
  const std::vector<std::uint64_t> eq{4, 4}, s91{9, 1}, s3{2, 3, 5};
  CHECK(aggregate(v, eq, Averaging::macro) == aggregate(v, eq, Averaging::weighted));
  CHECK(aggregate(one_zero, s91, Averaging::weighted) == doctest::Approx(0.9).epsilon(1e-15));
  // (0.5 * 2 + 1.0 * 3 + 0 * 5) / 10 = 0.4
  CHECK(aggregate(v3, s3, Averaging::weighted) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(aggregate(v3, s3, Averaging::macro) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mcc examples") {
  CHECK(mcc(cm2(5, 0, 0, 7)) == 1.0);
  CHECK(mcc(cm2(0, 5, 7, 0)) == -1.0);
  CHECK(mcc(cm2(1, 1, 1, 1)) == 0.0);
  CHECK(mcc(cm2(4, 0, 3, 0)) == 0.0);  // one class never predicted
  const ConfusionMatrix cm(3, {5, 1, 0, 2, 3, 1, 0, 4, 6});
  CHECK(std::abs(mcc(cm) - oracle::mcc_triple_sum({{5, 1, 0}, {2, 3, 1}, {0, 4, 6}})) <= 1e-12);
}

TEST_CASE("property: metrics against independent oracles") {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const Labels l = random_labels(rng);
    const ConfusionMatrix cm = confusion(l.t, l.p, l.c);
    const MetricsReport r = evaluate(cm);
    CHECK(r == evaluate(l.t, l.p, l.c));

    const auto m = oracle::count_pairs(l.t, l.p, static_cast<int>(l.c));
    CHECK(std::abs(r.mcc - oracle::mcc_triple_sum(m)) <= 1e-12);
    CHECK(std::abs(r.recall.weighted - r.accuracy) <= 1e-12);

    // Hand-rolled per-class scores.
    std::size_t hits = 0;
    for (std::size_t i = 0; i < l.t.size(); ++i) hits += l.t[i] == l.p[i];
    CHECK(r.accuracy == doctest::Approx(double(hits) / double(l.t.size())).epsilon(1e-15));
    for (std::size_t k = 0; k < l.c; ++k) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < l.t.size(); ++i) {
        tp += l.t[i] == k && l.p[i] == k;
        fp += l.t[i] != k && l.p[i] == k;
        fn += l.t[i] == k && l.p[i] != k;
      }
      const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
      CHECK(std::abs(r.precision.per_class[k] - p) <= 1e-12);
      CHECK(std::abs(r.recall.per_class[k] - rc) <= 1e-12);
      CHECK(std::abs(r.f1.per_class[k] - f) <= 1e-12);
    }
  }
}

TEST_CASE("property: binary mcc equals the closed form exactly") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto tp = rng.uniform_index(300), fn = rng.uniform_index(300), fp = rng.uniform_index(300),
               tn = rng.uniform_index(300);
    const double want = oracle::mcc_binary_closed_form(double(tp), double(tn), double(fp), double(fn));
    CHECK(std::abs(mcc(cm2(tn, fp, fn, tp)) - want) <= 1e-12);
  }
}

TEST_CASE("property: label permutation leaves summary scores unchanged") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Labels l = random_labels(rng);
    std::vector<ClassId> perm(l.c);
    std::iota(perm.begin(), perm.end(), ClassId{0});
    rng.shuffle(perm);
    std::vector<ClassId> t2, p2;
    for (std::size_t i = 0; i < l.t.size(); ++i) {
      t2.push_back(perm[l.t[i]]);
      p2.push_back(perm[l.p[i]]);
    }
    const MetricsReport a = evaluate(l.t, l.p, l.c), b = evaluate(t2, p2, l.c);
    CHECK(a.accuracy == b.accuracy);
    CHECK(std::abs(a.f1.macro - b.f1.macro) <= 1e-12);
    CHECK(std::abs(a.precision.macro - b.precision.macro) <= 1e-12);
    CHECK(std::abs(a.recall.macro - b.recall.macro) <= 1e-12);
    CHECK(std::abs(a.f1.weighted - b.f1.weighted) <= 1e-12);
    CHECK(std::abs(a.mcc - b.mcc) <= 1e-12);
  }
}

TEST_CASE("perfect predictions score one everywhere") {
  const std::vector<ClassId> y{0, 1, 2, 2, 1, 0, 0};
  const MetricsReport r = evaluate(y, y, 3);
  CHECK(r.accuracy == 1.0);
  CHECK(r.mcc == 1.0);
  CHECK(r.f1.weighted == 1.0);
  CHECK(r.f1.macro == 1.0);
  CHECK(r.precision.per_class == std::vector<double>{1, 1, 1});
}
