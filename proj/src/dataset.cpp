#include "treenet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "treenet/error.hpp"
#include "treenet/random.hpp"

namespace treenet {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_)
    throw Error(ErrorCode::DimensionMismatch, "matrix storage does not match shape");
}

Dataset::Dataset(Matrix features, std::vector<ClassId> labels,
                 std::vector<std::string> class_names, std::vector<std::string> feature_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)),
      feature_names_(std::move(feature_names)) {
  if (features_.rows() != labels_.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows do not match label count");
  if (labels_.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
  if (features_.cols() < 1) throw Error(ErrorCode::InvalidArgument, "dataset needs >= 1 feature");
  if (class_names_.size() < 2)
    throw Error(ErrorCode::DegenerateTraining, "dataset needs >= 2 classes");
  if (feature_names_.empty()) {
    feature_names_.reserve(features_.cols());
    for (std::size_t j = 0; j < features_.cols(); ++j) feature_names_.push_back("f" + std::to_string(j));
  }
  if (feature_names_.size() != features_.cols())
    throw Error(ErrorCode::DimensionMismatch, "feature name count does not match columns");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= class_names_.size())
      throw Error(ErrorCode::LabelOutOfRange, "label of row " + std::to_string(i) + " out of range");
  }
  for (std::size_t r = 0; r < features_.rows(); ++r) {
    for (std::size_t c = 0; c < features_.cols(); ++c) {
      if (!std::isfinite(features_(r, c)))
        throw Error(ErrorCode::NonFiniteValue,
                    "row " + std::to_string(r) + ", column " + feature_names_[c]);
    }
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes(), 0);
  for (ClassId y : labels_) ++counts[y];
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  const std::size_t d = n_features();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  std::vector<ClassId> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) {
    auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
    labels.push_back(labels_[r]);
  }
  return Dataset(Matrix(rows.size(), d, std::move(values)), std::move(labels), class_names_,
                 feature_names_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

CsvTable read_csv_table(const std::filesystem::path& path, const std::string& label_column, bool label_required) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyDataset, path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> header = split_record(line);
  for (auto& h : header) h = trim(h);
  auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end() && label_required)
    throw Error(ErrorCode::MissingLabelColumn, "column '" + label_column + "' not in header");
  const bool has_label = label_it != header.end();
  const std::size_t label_index = static_cast<std::size_t>(label_it - header.begin());

  CsvTable table;
  table.has_labels = has_label;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (!has_label || c != label_index) table.feature_names.push_back(header[c]);
  if (table.feature_names.empty())
    throw Error(ErrorCode::InvalidArgument, "no feature columns besides '" + label_column + "'");

  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_record(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::NonNumericFeature,
                  "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(header.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (has_label && c == label_index) continue;
      std::string cell = trim(fields[c]);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last)
        throw Error(ErrorCode::NonNumericFeature,
                    "row " + std::to_string(row) + ", column " + header[c] + ": '" + cell + "'");
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(row) + ", column " + header[c]);
      values.push_back(v);
    }
    if (has_label) table.labels.push_back(trim(fields[label_index]));
    ++row;
  }
  if (row == 0) throw Error(ErrorCode::EmptyDataset, path.string() + " has no data rows");
  table.features = Matrix(row, table.feature_names.size(), std::move(values));
  return table;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  CsvTable table = read_csv_table(path, label_column, true);
  std::vector<ClassId> labels;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, ClassId> class_ids;
  for (const auto& label : table.labels) {
    auto [it, inserted] = class_ids.try_emplace(label, static_cast<ClassId>(class_names.size()));
    if (inserted) class_names.push_back(label);
    labels.push_back(it->second);
  }
  if (class_names.size() < 2)
    throw Error(ErrorCode::DegenerateTraining, path.string() + " contains a single class");
  return Dataset(std::move(table.features), std::move(labels), std::move(class_names),
                 std::move(table.feature_names));
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::OutputUnwritable, "cannot write " + path.string());
  for (const auto& name : dataset.feature_names()) out << quote_if_needed(name) << ',';
  out << quote_if_needed(label_column) << '\n';
  char buf[64];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.row(i)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << quote_if_needed(dataset.class_names()[dataset.label(i)]) << '\n';
  }
  if (!out) throw Error(ErrorCode::OutputUnwritable, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Sampling

std::size_t stratified_count(double fraction, std::size_t class_size) {
  const double target = std::round(fraction * static_cast<double>(class_size));
  return std::max<std::size_t>(1, static_cast<std::size_t>(target));
}

namespace {

void check_fraction(double fraction, bool allow_one) {
  if (!(fraction > 0.0) || fraction > 1.0 || (!allow_one && fraction == 1.0))
    throw Error(ErrorCode::InvalidArgument, "fraction out of range: " + std::to_string(fraction));
}

std::vector<std::vector<std::size_t>> rows_by_class(std::span<const ClassId> labels,
                                                    std::size_t n_classes) {
  std::vector<std::vector<std::size_t>> groups(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) throw Error(ErrorCode::LabelOutOfRange, "label out of range");
    groups[labels[i]].push_back(i);
  }
  return groups;
}

}  // namespace

std::vector<std::size_t> stratified_chunk_indices(std::span<const ClassId> labels,
                                                  std::size_t n_classes, const ChunkSpec& spec) {
  check_fraction(spec.fraction, true);
  auto groups = rows_by_class(labels, n_classes);
  std::vector<std::size_t> selected;
  for (std::size_t k = 0; k < n_classes; ++k) {
    auto& group = groups[k];
    if (group.empty()) continue;
    Rng rng(derive_seed(spec.seed, {k}));
    rng.shuffle(group);
    const std::size_t take = std::min(group.size(), stratified_count(spec.fraction, group.size()));
    selected.insert(selected.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

Dataset stratified_chunk(const Dataset& dataset, const ChunkSpec& spec) {
  auto rows = stratified_chunk_indices(dataset.labels(), dataset.n_classes(), spec);
  return dataset.subset(rows);
}

SplitIndices stratified_split_indices(std::span<const ClassId> labels, std::size_t n_classes,
                                      double test_fraction, std::uint64_t seed) {
  check_fraction(test_fraction, false);
  auto groups = rows_by_class(labels, n_classes);
  SplitIndices split;
  for (std::size_t k = 0; k < n_classes; ++k) {
    auto& group = groups[k];
    if (group.empty()) continue;
    if (group.size() < 2)
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(k) + " has fewer than 2 rows");
    Rng rng(derive_seed(seed, {k}));
    rng.shuffle(group);
    // Every class keeps at least one training row.
    const std::size_t n_test = std::min(group.size() - 1, stratified_count(test_fraction, group.size()));
    split.test.insert(split.test.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), group.begin() + static_cast<std::ptrdiff_t>(n_test), group.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed) {
  auto split = stratified_split_indices(dataset.labels(), dataset.n_classes(), test_fraction, seed);
  return {dataset.subset(split.train), dataset.subset(split.test)};
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<double> blob_center(std::size_t k, std::size_t d) {
  std::vector<double> center(d, 0.0);
  center[k % d] = 4.0 * static_cast<double>(k);
  return center;
}

Dataset make_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t d, double spread,
                   std::uint64_t seed) {
  if (n_classes < 2 || n_per_class < 1 || d < 1 || !(spread > 0.0) || !std::isfinite(spread))
    throw Error(ErrorCode::InvalidArgument, "make_blobs: need n_classes >= 2, n_per_class >= 1, d >= 1, spread > 0");
  Rng rng(seed);
  Matrix features(n_classes * n_per_class, d);
  std::vector<ClassId> labels;
  labels.reserve(n_classes * n_per_class);
  std::vector<std::string> class_names;
  for (std::size_t k = 0; k < n_classes; ++k) {
    class_names.push_back("class_" + std::to_string(k));
    const auto center = blob_center(k, d);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      auto row = features.row(labels.size());
      for (std::size_t j = 0; j < d; ++j) row[j] = center[j] + spread * rng.normal();
      labels.push_back(static_cast<ClassId>(k));
    }
  }
  return Dataset(std::move(features), std::move(labels), std::move(class_names), {});
}

}  // namespace treenet
