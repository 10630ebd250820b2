#pragma once

// Independent reference implementations used only by the tests. None of
// them call into the library code they check.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

struct Split {
  std::size_t feature;
  double threshold;
  double decrease;
};

inline long double gini_ld(const std::vector<long double>& counts) {
  long double total = 0;
  for (auto c : counts) total += c;
  long double s = 0;
  for (auto c : counts) s += (c / total) * (c / total);
  return 1.0L - s;
}

/// Scores every (feature, midpoint) pair by a full pass over the rows and
/// keeps the largest decrease; on ties (|a - b| <= 1e-12) the lower
/// feature, then the lower threshold, wins.
inline std::optional<Split> brute_force_split(const std::vector<std::vector<double>>& x,
                                              const std::vector<int>& y, int n_classes,
                                              std::size_t min_leaf = 1) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const std::size_t d = x[0].size();
  std::vector<long double> parent(n_classes, 0);
  for (int label : y) parent[label] += 1;
  const long double parent_gini = gini_ld(parent);

  std::optional<Split> best;
  long double best_decrease = 0;
  for (std::size_t f = 0; f < d; ++f) {
    std::set<double> distinct;
    for (const auto& row : x) distinct.insert(row[f]);
    std::vector<double> values(distinct.begin(), distinct.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double t = (values[i] + values[i + 1]) / 2;
      std::vector<long double> left(n_classes, 0), right(n_classes, 0);
      std::size_t nl = 0, nr = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (x[r][f] <= t) {
          left[y[r]] += 1;
          ++nl;
        } else {
          right[y[r]] += 1;
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      const long double weighted = (nl * gini_ld(left) + nr * gini_ld(right)) / n;
      const long double dec = parent_gini - weighted;
      if (dec <= 1e-12L) continue;
      if (!best || dec > best_decrease + 1e-12L) {
        best = Split{f, t, static_cast<double>(dec)};
        best_decrease = dec;
      }
    }
  }
  return best;
}

/// Naive double-loop confusion count, rows = actual.
inline std::vector<std::vector<std::uint64_t>> count_pairs(const std::vector<unsigned>& t,
                                                            const std::vector<unsigned>& p, int c) {
  std::vector<std::vector<std::uint64_t>> m(c, std::vector<std::uint64_t>(c, 0));
  for (int a = 0; a < c; ++a)
    for (int b = 0; b < c; ++b)
      for (std::size_t i = 0; i < t.size(); ++i)
        if (static_cast<int>(t[i]) == a && static_cast<int>(p[i]) == b) ++m[a][b];
  return m;
}

/// Gorodkin's multiclass MCC evaluated literally from the triple sums.
inline double mcc_triple_sum(const std::vector<std::vector<std::uint64_t>>& m) {
  const std::size_t c = m.size();
  long double num = 0;
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t l = 0; l < c; ++l)
      for (std::size_t q = 0; q < c; ++q)
        num += static_cast<long double>(m[k][k]) * m[l][q] - static_cast<long double>(m[k][l]) * m[q][k];
  long double d1 = 0, d2 = 0;
  for (std::size_t k = 0; k < c; ++k) {
    long double row_k = 0, col_k = 0, rest_rows = 0, rest_cols = 0;
    for (std::size_t l = 0; l < c; ++l) {
      row_k += m[k][l];
      col_k += m[l][k];
    }
    for (std::size_t f = 0; f < c; ++f) {
      if (f == k) continue;
      for (std::size_t g = 0; g < c; ++g) {
        rest_rows += m[f][g];
        rest_cols += m[g][f];
      }
    }
    d1 += row_k * rest_rows;
    d2 += col_k * rest_cols;
  }
  if (d1 == 0 || d2 == 0) return 0.0;
  return static_cast<double>(num / (std::sqrt(d1) * std::sqrt(d2)));
}

/// Closed-form binary MCC, class 1 as positive.
inline double mcc_binary_closed_form(double tp, double tn, double fp, double fn) {
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

inline std::size_t nearest_center(const std::vector<std::vector<double>>& centers,
                                  const std::vector<double>& x) {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    double s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - centers[k][j]) * (x[j] - centers[k][j]);
    if (s < best_d) {
      best_d = s;
      best = k;
    }
  }
  return best;
}

/// Small recursive-descent evaluator for + - * / ^ and parentheses over
/// named variables, in long double. Used to check closed-form cost models
/// against their textual formulas.
class Expr {
 public:
  Expr(std::string text, std::map<std::string, long double> vars) : s_(std::move(text)), vars_(std::move(vars)) {}

  long double eval() {
    pos_ = 0;
    const long double v = sum();
    skip();
    if (pos_ != s_.size()) throw std::runtime_error("trailing input in " + s_);
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  long double sum() {
    long double v = product();
    for (;;) {
      if (eat('+')) v += product();
      else if (eat('-')) v -= product();
      else return v;
    }
  }
  long double product() {
    long double v = power();
    for (;;) {
      if (eat('*')) v *= power();
      else if (eat('/')) v /= power();
      else return v;
    }
  }
  long double power() {
    const long double base = atom();
    if (eat('^')) return std::pow(base, power());
    return base;
  }
  long double atom() {
    if (eat('(')) {
      const long double v = sum();
      if (!eat(')')) throw std::runtime_error("missing ) in " + s_);
      return v;
    }
    skip();
    std::size_t start = pos_;
    if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
      return std::stold(s_.substr(start, pos_ - start));
    }
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    const auto it = vars_.find(name);
    if (it == vars_.end()) throw std::runtime_error("unknown symbol '" + name + "'");
    return it->second;
  }

  std::string s_;
  std::map<std::string, long double> vars_;
  std::size_t pos_ = 0;
};

inline long double eval(const std::string& text, std::map<std::string, long double> vars) {
  return Expr(text, std::move(vars)).eval();
}

}  // namespace oracle
