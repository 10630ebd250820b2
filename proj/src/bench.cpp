#include "treenet/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "treenet/error.hpp"
#include "treenet/featurize.hpp"
#include "treenet/random.hpp"
#include "treenet/serialization.hpp"

namespace treenet {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

void validate(const ExperimentConfig& config) {
  if (config.fractions.empty()) throw Error(ErrorCode::InvalidConfig, "fractions must be nonempty");
  for (std::size_t i = 0; i < config.fractions.size(); ++i) {
    const double f = config.fractions[i];
    if (!(f > 0.0) || f > 1.0) throw Error(ErrorCode::InvalidConfig, "fraction out of (0, 1]: " + std::to_string(f));
    if (i > 0 && !(config.fractions[i - 1] < f))
      throw Error(ErrorCode::InvalidConfig, "fractions must be strictly ascending");
  }
  if (!(config.test_fraction > 0.0) || !(config.test_fraction < 1.0))
    throw Error(ErrorCode::InvalidConfig, "test_fraction must be in (0, 1)");
  if (config.repeats < 1) throw Error(ErrorCode::InvalidConfig, "repeats must be >= 1");
  if (config.fps_repeats < 1) throw Error(ErrorCode::InvalidConfig, "fps_repeats must be >= 1");
  validate(config.cascade);
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("field '" + key + "' is missing or has the wrong type");
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      config_error("unknown key '" + key + "' in " + where);
  }
}

int parse_version(const json& doc, const char* what) {
  if (!doc.contains("format_version")) config_error(std::string(what) + ": missing format_version");
  const auto& v = doc["format_version"];
  if (!v.is_number_integer()) config_error(std::string(what) + ": format_version must be an integer");
  return v.get<int>();
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& doc) {
  if (!doc.is_object()) config_error("experiment config must be an object");
  const int version = parse_version(doc, "experiment config");
  if (version != kExperimentFormatVersion)
    throw Error(ErrorCode::UnsupportedVersion, "experiment config format_version " + std::to_string(version));
  check_keys(doc, {"format", "format_version", "data", "fractions", "test_fraction", "repeats", "fps_repeats",
                   "cascade", "seed", "output", "n_threads"},
             "experiment config");

  ExperimentConfig config;
  if (doc.contains("data")) {
    const json& data = doc["data"];
    if (!data.is_object()) config_error("'data' must be an object");
    const auto kind = get_as<std::string>(data, "kind");
    if (kind == "csv" || kind == "images") {
      check_keys(data, {"kind", "path", "label_column"}, "data");
      config.source.kind = kind == "csv" ? DataSource::Kind::csv : DataSource::Kind::images;
      config.source.path = get_as<std::string>(data, "path");
      if (data.contains("label_column")) config.source.label_column = get_as<std::string>(data, "label_column");
    } else if (kind == "blobs") {
      check_keys(data, {"kind", "n_classes", "n_per_class", "d", "spread", "seed"}, "data");
      config.source.kind = DataSource::Kind::blobs;
      auto& b = config.source.blobs;
      if (data.contains("n_classes")) b.n_classes = get_as<std::size_t>(data, "n_classes");
      if (data.contains("n_per_class")) b.n_per_class = get_as<std::size_t>(data, "n_per_class");
      if (data.contains("d")) b.d = get_as<std::size_t>(data, "d");
      if (data.contains("spread")) b.spread = get_as<double>(data, "spread");
      if (data.contains("seed")) b.seed = get_as<std::uint64_t>(data, "seed");
    } else {
      config_error("unknown data kind '" + kind + "'");
    }
  }
  if (doc.contains("fractions")) config.fractions = get_as<std::vector<double>>(doc, "fractions");
  if (doc.contains("test_fraction")) config.test_fraction = get_as<double>(doc, "test_fraction");
  if (doc.contains("repeats")) config.repeats = get_as<std::size_t>(doc, "repeats");
  if (doc.contains("fps_repeats")) config.fps_repeats = get_as<std::size_t>(doc, "fps_repeats");
  if (doc.contains("seed")) config.seed = get_as<std::uint64_t>(doc, "seed");
  if (doc.contains("output")) config.output = get_as<std::string>(doc, "output");
  if (doc.contains("n_threads")) config.n_threads = get_as<std::size_t>(doc, "n_threads");
  if (doc.contains("cascade")) config.cascade = cascade_config_from_json(doc["cascade"]);
  validate(config);
  return config;
}

ordered_json to_json(const ExperimentConfig& config) {
  ordered_json j;
  j["format"] = "treenet.experiment";
  j["format_version"] = kExperimentFormatVersion;
  ordered_json data;
  switch (config.source.kind) {
    case DataSource::Kind::csv:
    case DataSource::Kind::images:
      data["kind"] = config.source.kind == DataSource::Kind::csv ? "csv" : "images";
      data["path"] = config.source.path.string();
      if (config.source.kind == DataSource::Kind::csv) data["label_column"] = config.source.label_column;
      break;
    case DataSource::Kind::blobs:
      data["kind"] = "blobs";
      data["n_classes"] = config.source.blobs.n_classes;
      data["n_per_class"] = config.source.blobs.n_per_class;
      data["d"] = config.source.blobs.d;
      data["spread"] = config.source.blobs.spread;
      data["seed"] = config.source.blobs.seed;
      break;
  }
  j["data"] = std::move(data);
  j["fractions"] = config.fractions;
  j["test_fraction"] = config.test_fraction;
  j["repeats"] = config.repeats;
  j["fps_repeats"] = config.fps_repeats;
  j["cascade"] = to_json(config.cascade);
  j["seed"] = config.seed;
  j["output"] = config.output.string();
  j["n_threads"] = config.n_threads;
  return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
  return experiment_config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Sweep

Dataset load_source(const DataSource& source) {
  switch (source.kind) {
    case DataSource::Kind::csv:
      return load_csv(source.path, source.label_column);
    case DataSource::Kind::images:
      return featurize_directory(source.path).dataset;
    case DataSource::Kind::blobs:
      return make_blobs(source.blobs.n_classes, source.blobs.n_per_class, source.blobs.d, source.blobs.spread,
                        source.blobs.seed);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown data source");
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<FractionSummary> summarize(std::span<const RunRecord> runs) {
  std::vector<FractionSummary> out;
  std::size_t begin = 0;
  while (begin < runs.size()) {
    std::size_t end = begin;
    while (end < runs.size() && runs[end].chunk == runs[begin].chunk) ++end;
    auto med = [&](auto field) {
      std::vector<double> v;
      for (std::size_t i = begin; i < end; ++i) v.push_back(field(runs[i]));
      return median(std::move(v));
    };
    FractionSummary s;
    s.chunk = runs[begin].chunk;
    s.size = med([](const RunRecord& r) { return static_cast<double>(r.size); });
    s.train_seconds = med([](const RunRecord& r) { return r.train_seconds; });
    s.accuracy = med([](const RunRecord& r) { return r.metrics.accuracy; });
    s.precision_weighted = med([](const RunRecord& r) { return r.metrics.precision.weighted; });
    s.recall_weighted = med([](const RunRecord& r) { return r.metrics.recall.weighted; });
    s.f1_weighted = med([](const RunRecord& r) { return r.metrics.f1.weighted; });
    s.mcc = med([](const RunRecord& r) { return r.metrics.mcc; });
    s.fps = med([](const RunRecord& r) { return r.fps; });
    out.push_back(s);
    begin = end;
  }
  return out;
}

RunReport run_experiment(const ExperimentConfig& config, const Dataset& data) {
  validate(config);
  const std::size_t n_classes = data.n_classes();

  const auto split = stratified_split_indices(data.labels(), n_classes, config.test_fraction,
                                              derive_seed(config.seed, {0}));
  const Dataset pool = data.subset(split.train);
  const Dataset test = data.subset(split.test);

  RunReport report;
  report.dataset_size = data.size();
  report.n_classes = n_classes;
  report.class_names = data.class_names();
  report.test_rows = split.test;

  for (double fraction : config.fractions) {
    for (std::size_t repeat = 0; repeat < config.repeats; ++repeat) {
      // The chunk stream depends on the repeat only, so smaller fractions
      // are prefixes of larger ones within a repeat.
      const ChunkSpec spec{fraction, derive_seed(config.seed, {1, repeat})};
      const auto chunk_rows = stratified_chunk_indices(pool.labels(), n_classes, spec);
      const Dataset chunk = pool.subset(chunk_rows);

      CascadeConfig cascade = config.cascade;
      cascade.seed = derive_seed(config.cascade.seed, {repeat});
      std::size_t smallest = chunk.size();
      for (auto c : chunk.class_counts())
        if (c > 0) smallest = std::min(smallest, c);
      cascade.k_folds = std::max<std::size_t>(2, std::min(cascade.k_folds, smallest));

      const auto started = std::chrono::steady_clock::now();
      const CascadeModel model = fit_cascade(chunk, cascade, FitOptions{config.n_threads, nullptr});
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

      RunRecord record;
      record.chunk = fraction;
      record.repeat = repeat;
      record.size = chunk.size();
      record.train_seconds = seconds;
      record.metrics = evaluate(test.labels(), predict_all(model, test.features()), n_classes);
      record.fps = measure_fps(model, test, config.fps_repeats);
      record.layers = model.layers.size();
      record.k_folds = cascade.k_folds;
      record.train_rows.reserve(chunk_rows.size());
      for (std::size_t r : chunk_rows) record.train_rows.push_back(split.train[r]);
      report.runs.push_back(std::move(record));
    }
  }
  report.summary = summarize(report.runs);
  return report;
}

RunReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  const Dataset data = load_source(config.source);
  RunReport report = run_experiment(config, data);
  if (!config.output.empty()) emit_report(report, config.output);
  return report;
}

// ---------------------------------------------------------------------------
// Throughput

FpsMeasurement measure_fps_detailed(const CascadeModel& model, const Matrix& probe, std::size_t repeats) {
  if (probe.rows() == 0) throw Error(ErrorCode::InvalidArgument, "probe set is empty");
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  using clock = std::chrono::steady_clock;
  // Keeps the optimizer from discarding predictions.
  volatile ClassId sink = 0;
  auto pass = [&] {
    const auto start = clock::now();
    for (std::size_t i = 0; i < probe.rows(); ++i) sink = predict(model, probe.row(i));
    return std::chrono::duration<double>(clock::now() - start).count();
  };
  FpsMeasurement m;
  m.warmup_seconds = pass();
  const double rows = static_cast<double>(probe.rows());
  for (std::size_t r = 0; r < repeats; ++r) {
    const double seconds = std::max(pass(), 1e-9);
    m.pass_fps.push_back(rows / seconds);
  }
  m.median_fps = median(m.pass_fps);
  (void)sink;
  return m;
}

double measure_fps(const CascadeModel& model, const Dataset& probe, std::size_t repeats) {
  return measure_fps_detailed(model, probe.features(), repeats).median_fps;
}

// ---------------------------------------------------------------------------
// Analytical neural-network cost

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorCode::InvalidArgument, "cost overflows 64 bits");
  return out;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorCode::InvalidArgument, "cost overflows 64 bits");
  return out;
}

void require_positive(std::uint64_t v, const char* name) {
  if (v == 0) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be >= 1");
}

}  // namespace

std::uint64_t nn_inference_cost(std::uint64_t layers, std::uint64_t neurons) {
  require_positive(layers, "L");
  require_positive(neurons, "N");
  return checked_mul(layers, checked_add(checked_mul(neurons, neurons), checked_mul(2, neurons)));
}

double nn_training_cost(std::uint64_t epochs, std::uint64_t dataset_size, std::uint64_t batch_size,
                        std::uint64_t layers, std::uint64_t neurons) {
  require_positive(epochs, "e");
  require_positive(dataset_size, "D");
  require_positive(batch_size, "B");
  if (batch_size > dataset_size) throw Error(ErrorCode::InvalidArgument, "B must not exceed D");
  const std::uint64_t per_batch = checked_add(checked_mul(2, nn_inference_cost(layers, neurons)),
                                              checked_mul(layers, checked_mul(neurons, neurons)));
  // e (D / B) X computed as (e D X) / B: one rounding of the exact quotient
  // while e D X stays below 2^53.
  return static_cast<double>(checked_mul(checked_mul(epochs, dataset_size), per_batch)) /
         static_cast<double>(batch_size);
}

NnFlops nn_flops(std::span<const std::uint64_t> widths, std::uint64_t epochs) {
  if (widths.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two layer widths");
  require_positive(epochs, "E");
  for (auto w : widths) require_positive(w, "layer width");
  NnFlops out;
  for (std::size_t l = 1; l < widths.size(); ++l)
    out.forward = checked_add(out.forward, checked_mul(widths[l - 1], widths[l]));
  out.total = checked_mul(checked_mul(2, epochs), out.forward);
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

ordered_json scores_to_json(const ClassScores& s) {
  ordered_json j;
  j["per_class"] = s.per_class;
  j["macro"] = s.macro;
  j["weighted"] = s.weighted;
  return j;
}

ClassScores scores_from_json(const json& j) {
  ClassScores s;
  s.per_class = j.at("per_class").get<std::vector<double>>();
  s.macro = j.at("macro").get<double>();
  s.weighted = j.at("weighted").get<double>();
  return s;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ordered_json to_json(const MetricsReport& m) {
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = scores_to_json(m.precision);
  j["recall"] = scores_to_json(m.recall);
  j["f1"] = scores_to_json(m.f1);
  j["mcc"] = m.mcc;
  return j;
}

MetricsReport metrics_from_json(const json& j) {
  MetricsReport m;
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = scores_from_json(j.at("precision"));
  m.recall = scores_from_json(j.at("recall"));
  m.f1 = scores_from_json(j.at("f1"));
  m.mcc = j.at("mcc").get<double>();
  return m;
}

ordered_json to_json(const RunReport& report) {
  ordered_json j;
  j["format"] = "treenet.run_report";
  j["format_version"] = kReportFormatVersion;
  j["dataset_size"] = report.dataset_size;
  j["n_classes"] = report.n_classes;
  j["class_names"] = report.class_names;
  j["test_rows"] = report.test_rows;
  ordered_json runs = ordered_json::array();
  for (const auto& r : report.runs) {
    ordered_json o;
    o["chunk"] = r.chunk;
    o["repeat"] = r.repeat;
    o["size"] = r.size;
    o["train_seconds"] = r.train_seconds;
    o["metrics"] = to_json(r.metrics);
    o["fps"] = r.fps;
    o["layers"] = r.layers;
    o["k_folds"] = r.k_folds;
    o["train_rows"] = r.train_rows;
    runs.push_back(std::move(o));
  }
  j["runs"] = std::move(runs);
  ordered_json summary = ordered_json::array();
  for (const auto& s : report.summary) {
    ordered_json o;
    o["chunk"] = s.chunk;
    o["size"] = s.size;
    o["train_seconds"] = s.train_seconds;
    o["accuracy"] = s.accuracy;
    o["precision_weighted"] = s.precision_weighted;
    o["recall_weighted"] = s.recall_weighted;
    o["f1_weighted"] = s.f1_weighted;
    o["mcc"] = s.mcc;
    o["fps"] = s.fps;
    summary.push_back(std::move(o));
  }
  j["summary"] = std::move(summary);
  return j;
}

RunReport run_report_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "/: expected object");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
    throw Error(ErrorCode::SchemaViolation, "/format_version: missing or not an integer");
  if (doc["format_version"].get<int>() != kReportFormatVersion)
    throw Error(ErrorCode::UnsupportedVersion, "report format_version " + doc["format_version"].dump());
  try {
    RunReport report;
    report.dataset_size = doc.at("dataset_size").get<std::size_t>();
    report.n_classes = doc.at("n_classes").get<std::size_t>();
    report.class_names = doc.at("class_names").get<std::vector<std::string>>();
    report.test_rows = doc.at("test_rows").get<std::vector<std::size_t>>();
    for (const auto& o : doc.at("runs")) {
      RunRecord r;
      r.chunk = o.at("chunk").get<double>();
      r.repeat = o.at("repeat").get<std::size_t>();
      r.size = o.at("size").get<std::size_t>();
      r.train_seconds = o.at("train_seconds").get<double>();
      r.metrics = metrics_from_json(o.at("metrics"));
      r.fps = o.at("fps").get<double>();
      r.layers = o.at("layers").get<std::size_t>();
      r.k_folds = o.at("k_folds").get<std::size_t>();
      r.train_rows = o.at("train_rows").get<std::vector<std::size_t>>();
      report.runs.push_back(std::move(r));
    }
    for (const auto& o : doc.at("summary")) {
      FractionSummary s;
      s.chunk = o.at("chunk").get<double>();
      s.size = o.at("size").get<double>();
      s.train_seconds = o.at("train_seconds").get<double>();
      s.accuracy = o.at("accuracy").get<double>();
      s.precision_weighted = o.at("precision_weighted").get<double>();
      s.recall_weighted = o.at("recall_weighted").get<double>();
      s.f1_weighted = o.at("f1_weighted").get<double>();
      s.mcc = o.at("mcc").get<double>();
      s.fps = o.at("fps").get<double>();
      report.summary.push_back(s);
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("run report: ") + e.what());
  }
}

ReportPaths report_paths(const std::filesystem::path& stem) {
  auto base = stem;
  if (base.extension() == ".json" || base.extension() == ".csv") base.replace_extension();
  auto document = base;
  document += ".json";
  auto table = base;
  table += ".csv";
  return {document, table};
}

ReportPaths emit_report(const RunReport& report, const std::filesystem::path& stem) {
  const auto paths = report_paths(stem);
  {
    std::ofstream out(paths.document);
    if (!out) throw Error(ErrorCode::OutputUnwritable, "cannot write " + paths.document.string());
    out << to_json(report).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::OutputUnwritable, "write failed for " + paths.document.string());
  }
  std::ofstream out(paths.table);
  if (!out) throw Error(ErrorCode::OutputUnwritable, "cannot write " + paths.table.string());
  out << kReportTableHeader << '\n';
  for (const auto& r : report.runs) {
    out << format_number(r.chunk) << ',' << r.size << ',' << format_number(r.train_seconds) << ','
        << format_number(r.metrics.accuracy) << ',' << format_number(r.metrics.precision.weighted) << ','
        << format_number(r.metrics.recall.weighted) << ',' << format_number(r.metrics.f1.weighted) << ','
        << format_number(r.metrics.mcc) << ',' << format_number(r.fps) << '\n';
  }
  if (!out) throw Error(ErrorCode::OutputUnwritable, "write failed for " + paths.table.string());
  return paths;
}

RunReport load_report(const std::filesystem::path& document) {
  std::ifstream in(document);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + document.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("/: ") + e.what());
  }
  return run_report_from_json(doc);
}

}  // namespace treenet
