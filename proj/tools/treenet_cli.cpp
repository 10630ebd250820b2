// treenet: train, apply and benchmark cascade forest models.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "treenet/bench.hpp"
#include "treenet/cascade.hpp"
#include "treenet/dataset.hpp"
#include "treenet/error.hpp"
#include "treenet/featurize.hpp"
#include "treenet/metrics.hpp"
#include "treenet/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace treenet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

// Writes to `path`, or stdout when it is empty.
void write_output(const std::optional<fs::path>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path);
  if (!out) throw Error(ErrorCode::OutputUnwritable, "cannot write " + path->string());
  out << text;
  if (!out) throw Error(ErrorCode::OutputUnwritable, "write failed for " + path->string());
}

Dataset load_training_data(const fs::path& path, const std::string& label_column, std::size_t threads) {
  if (fs::is_directory(path)) {
    FeaturizeResult result = featurize_directory(path, threads);
    for (const auto& skipped : result.unreadable) std::cerr << "skipped unreadable file " << skipped << '\n';
    return std::move(result.dataset);
  }
  return load_csv(path, label_column);
}

// Features for an existing model: a CSV (label column optional) or an
// image directory.
CsvTable load_inputs(const fs::path& path, const std::string& label_column, std::size_t threads) {
  if (fs::is_directory(path)) {
    const Dataset ds = load_training_data(path, label_column, threads);
    CsvTable table;
    table.features = ds.features();
    table.feature_names = ds.feature_names();
    table.has_labels = true;
    for (std::size_t i = 0; i < ds.size(); ++i) table.labels.push_back(ds.class_names()[ds.label(i)]);
    return table;
  }
  return read_csv_table(path, label_column, false);
}

void check_width(const CascadeModel& model, const CsvTable& table) {
  if (table.features.cols() != model.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.input_dim) +
                                                  " feature columns, data has " +
                                                  std::to_string(table.features.cols()));
}

std::vector<ClassId> labels_for_model(const CascadeModel& model, const CsvTable& table) {
  if (!table.has_labels) throw Error(ErrorCode::MissingLabelColumn, "data has no label column");
  std::unordered_map<std::string, ClassId> ids;
  for (std::size_t k = 0; k < model.class_names.size(); ++k) ids.emplace(model.class_names[k], ClassId(k));
  std::vector<ClassId> out;
  out.reserve(table.labels.size());
  for (const auto& name : table.labels) {
    auto it = ids.find(name);
    if (it == ids.end()) throw Error(ErrorCode::LabelOutOfRange, "label '" + name + "' is not a model class");
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad fraction '" + item + "'");
    }
  }
  return out;
}

std::string format_report_table(const RunReport& report) {
  std::ostringstream out;
  out << "chunk  size  train_s  acc     P_w     R_w     F1_w    mcc     fps\n";
  for (const auto& s : report.summary) {
    char line[160];
    std::snprintf(line, sizeof line, "%-6.3g %-5.0f %-8.3f %-7.4f %-7.4f %-7.4f %-7.4f %-7.4f %.1f\n", s.chunk,
                  s.size, s.train_seconds, s.accuracy, s.precision_weighted, s.recall_weighted, s.f1_weighted,
                  s.mcc, s.fps);
    out << line;
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TreeNet cascade forest toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string label_column = "label";
  std::size_t threads = 1;

  // train
  auto* train = app.add_subcommand("train", "Fit a cascade on a CSV file or image directory");
  fs::path train_data, train_out;
  std::optional<fs::path> train_config;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--data", train_data, "CSV file or image class directory")->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_option("--config", train_config, "Cascade config (JSON key-value mapping)");
  train->add_option("--seed", train_seed, "Overrides the config seed");
  train->add_option("--label-column", label_column, "Label column name");
  train->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict labels with a saved model");
  fs::path predict_model, predict_data;
  std::optional<fs::path> predict_out;
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--data", predict_data, "CSV file (label column optional)")->required();
  predict_cmd->add_option("--out", predict_out, "Prediction CSV (default stdout)");
  predict_cmd->add_option("--label-column", label_column, "Label column to ignore");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a saved model on labeled data");
  fs::path evaluate_model, evaluate_data;
  std::optional<fs::path> evaluate_out;
  evaluate_cmd->add_option("--model", evaluate_model, "Model file")->required();
  evaluate_cmd->add_option("--data", evaluate_data, "Labeled CSV file or image directory")->required();
  evaluate_cmd->add_option("--out", evaluate_out, "Metrics JSON (default stdout)");
  evaluate_cmd->add_option("--label-column", label_column, "Label column name");

  // experiment
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a data-fraction sweep");
  fs::path experiment_config;
  std::optional<fs::path> experiment_out;
  std::optional<std::string> experiment_fractions;
  std::optional<std::uint64_t> experiment_seed;
  std::optional<std::size_t> experiment_threads;
  experiment_cmd->add_option("--config", experiment_config, "Experiment config file")->required();
  experiment_cmd->add_option("--out", experiment_out, "Report stem (writes <stem>.json and <stem>.csv)");
  experiment_cmd->add_option("--fractions", experiment_fractions, "Comma-separated fractions, e.g. 0.5,1.0");
  experiment_cmd->add_option("--seed", experiment_seed, "Overrides the experiment seed");
  experiment_cmd->add_option("--threads", experiment_threads, "Training threads (0 = all cores)");

  // bench-fps
  auto* fps_cmd = app.add_subcommand("bench-fps", "Measure single-sample inference throughput");
  fs::path fps_model, fps_data;
  std::size_t fps_repeats = 3;
  fps_cmd->add_option("--model", fps_model, "Model file")->required();
  fps_cmd->add_option("--data", fps_data, "Probe CSV file (label column optional)")->required();
  fps_cmd->add_option("--repeats", fps_repeats, "Timed passes")->check(CLI::PositiveNumber);
  fps_cmd->add_option("--label-column", label_column, "Label column to ignore");

  // featurize
  auto* featurize_cmd = app.add_subcommand("featurize", "Convert an image class directory into a CSV");
  fs::path featurize_root, featurize_out;
  featurize_cmd->add_option("--images", featurize_root, "Directory with one subdirectory per class")->required();
  featurize_cmd->add_option("--out", featurize_out, "CSV file to write")->required();
  featurize_cmd->add_option("--label-column", label_column, "Label column name");
  featurize_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // nn-cost
  auto* cost_cmd = app.add_subcommand("nn-cost", "Analytical operation counts for a dense network");
  std::optional<std::uint64_t> layers, neurons, epochs, dataset_size, batch_size;
  std::optional<std::string> widths_text;
  cost_cmd->add_option("--layers", layers, "L: hidden layer count");
  cost_cmd->add_option("--neurons", neurons, "N: neurons per layer");
  cost_cmd->add_option("--epochs", epochs, "e (or E for --widths)");
  cost_cmd->add_option("--dataset-size", dataset_size, "D: training set size");
  cost_cmd->add_option("--batch-size", batch_size, "B: batch size");
  cost_cmd->add_option("--widths", widths_text, "Comma-separated layer widths n_0,...,n_L");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) {
      CascadeConfig config;
      if (train_config) config = cascade_config_from_json(read_json_file(*train_config));
      if (train_seed) config.seed = *train_seed;
      const Dataset data = load_training_data(train_data, label_column, threads);
      const CascadeModel model = fit_cascade(data, config, FitOptions{threads, nullptr});
      save_model(model, train_out);
      std::cerr << "trained " << model.layers.size() << " layer(s) on " << data.size() << " rows, "
                << "validation metric " << model.layers.back().validation_metric << '\n';
    } else if (predict_cmd->parsed()) {
      const CascadeModel model = load_model(predict_model);
      const CsvTable table = load_inputs(predict_data, label_column, 1);
      check_width(model, table);
      std::ostringstream out;
      out << "prediction";
      for (const auto& name : model.class_names) out << ",p_" << name;
      out << '\n';
      char buf[32];
      for (std::size_t i = 0; i < table.features.rows(); ++i) {
        const auto p = predict_proba_cascade(model, table.features.row(i));
        out << model.class_names[argmax(p)];
        for (double v : p) {
          auto res = std::to_chars(buf, buf + sizeof buf, v);
          out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
      }
      write_output(predict_out, out.str());
    } else if (evaluate_cmd->parsed()) {
      const CascadeModel model = load_model(evaluate_model);
      const CsvTable table = load_inputs(evaluate_data, label_column, 1);
      check_width(model, table);
      const auto truth = labels_for_model(model, table);
      const MetricsReport report = evaluate(truth, predict_all(model, table.features), model.n_classes);
      ordered_json doc = to_json(report);
      doc["class_names"] = model.class_names;
      doc["n_samples"] = truth.size();
      write_output(evaluate_out, doc.dump(2) + "\n");
    } else if (experiment_cmd->parsed()) {
      ExperimentConfig config = load_experiment_config(experiment_config);
      // Relative data paths are resolved against the config file.
      if (config.source.kind != DataSource::Kind::blobs && config.source.path.is_relative())
        config.source.path = experiment_config.parent_path() / config.source.path;
      if (experiment_out) config.output = *experiment_out;
      if (experiment_fractions) config.fractions = parse_fractions(*experiment_fractions);
      if (experiment_seed) config.seed = *experiment_seed;
      if (experiment_threads) config.n_threads = *experiment_threads;
      validate(config);
      const RunReport report = run_experiment(config);
      std::cout << format_report_table(report);
      if (!config.output.empty()) {
        const ReportPaths paths = report_paths(config.output);
        std::cerr << "wrote " << paths.document.string() << " and " << paths.table.string() << '\n';
      }
    } else if (fps_cmd->parsed()) {
      const CascadeModel model = load_model(fps_model);
      const CsvTable table = load_inputs(fps_data, label_column, 1);
      check_width(model, table);
      const FpsMeasurement m = measure_fps_detailed(model, table.features, fps_repeats);
      ordered_json doc;
      doc["rows"] = table.features.rows();
      doc["repeats"] = fps_repeats;
      doc["warmup_seconds"] = m.warmup_seconds;
      doc["pass_fps"] = m.pass_fps;
      doc["median_fps"] = m.median_fps;
      std::cout << doc.dump(2) << '\n';
    } else if (featurize_cmd->parsed()) {
      FeaturizeResult result = featurize_directory(featurize_root, threads);
      for (const auto& skipped : result.unreadable) std::cerr << "skipped unreadable file " << skipped << '\n';
      write_csv(result.dataset, featurize_out, label_column);
      std::cerr << "featurized " << result.dataset.size() << " images into " << featurize_out.string() << '\n';
    } else if (cost_cmd->parsed()) {
      ordered_json doc;
      if (layers || neurons) {
        if (!layers || !neurons) throw Error(ErrorCode::InvalidArgument, "--layers and --neurons go together");
        doc["inference"] = nn_inference_cost(*layers, *neurons);
        if (epochs && dataset_size && batch_size)
          doc["training"] = nn_training_cost(*epochs, *dataset_size, *batch_size, *layers, *neurons);
        else if (epochs || dataset_size || batch_size)
          throw Error(ErrorCode::InvalidArgument, "training cost needs --epochs, --dataset-size and --batch-size");
      }
      if (widths_text) {
        std::vector<std::uint64_t> widths;
        std::stringstream ss(*widths_text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          std::uint64_t w = 0;
          auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), w);
          if (ec != std::errc() || ptr != item.data() + item.size())
            throw Error(ErrorCode::InvalidArgument, "bad width '" + item + "'");
          widths.push_back(w);
        }
        const NnFlops f = nn_flops(widths, epochs.value_or(1));
        doc["forward"] = f.forward;
        doc["total"] = f.total;
      }
      if (doc.empty()) throw Error(ErrorCode::InvalidArgument, "give --layers/--neurons and/or --widths");
      std::cout << doc.dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_data_error(e.code()) ? kData : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
