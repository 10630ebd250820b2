#include "treenet/serialization.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "treenet/error.hpp"

namespace treenet {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* to_string(GrowthMetric m) { return m == GrowthMetric::accuracy ? "accuracy" : "weighted_f1"; }
const char* to_string(ForestKind k) { return k == ForestKind::bagged ? "bagged" : "extra"; }
const char* to_string(SplitMode m) {
  return m == SplitMode::exhaustive ? "exhaustive" : "random_threshold";
}

template <typename T>
ordered_json optional_to_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

// Read-only cursor into a parsed document that remembers where it is, so
// every schema error names the offending location.
class Cursor {
 public:
  Cursor(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& value() const { return value_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::SchemaViolation, (path_.empty() ? "/" : path_) + ": " + what);
  }

  Cursor field(const std::string& key) const {
    if (!value_.is_object()) fail("expected object");
    auto it = value_.find(key);
    if (it == value_.end()) Cursor(value_, path_ + "/" + key).fail("missing field");
    return Cursor(*it, path_ + "/" + key);
  }
  bool has(const std::string& key) const { return value_.is_object() && value_.contains(key); }

  Cursor at(std::size_t i) const { return Cursor(value_[i], path_ + "/" + std::to_string(i)); }

  std::size_t array_size() const {
    if (!value_.is_array()) fail("expected array");
    return value_.size();
  }

  std::uint64_t as_uint() const {
    if (!value_.is_number_unsigned()) fail("expected non-negative integer");
    return value_.get<std::uint64_t>();
  }
  std::int64_t as_int() const {
    if (!value_.is_number_integer()) fail("expected integer");
    return value_.get<std::int64_t>();
  }
  double as_double() const {
    if (!value_.is_number()) fail("expected number");
    return value_.get<double>();
  }
  std::string as_string() const {
    if (!value_.is_string()) fail("expected string");
    return value_.get<std::string>();
  }
  bool as_bool() const {
    if (!value_.is_boolean()) fail("expected boolean");
    return value_.get<bool>();
  }

  std::size_t as_size() const { return static_cast<std::size_t>(as_uint()); }
  std::uint32_t as_u32() const {
    auto v = as_uint();
    if (v > std::numeric_limits<std::uint32_t>::max()) fail("value out of range");
    return static_cast<std::uint32_t>(v);
  }
  std::optional<std::size_t> as_optional_size() const {
    if (value_.is_null()) return std::nullopt;
    return as_size();
  }

 private:
  const json& value_;
  std::string path_;
};

GrowthMetric parse_growth_metric(const Cursor& c) {
  auto s = c.as_string();
  if (s == "weighted_f1") return GrowthMetric::weighted_f1;
  if (s == "accuracy") return GrowthMetric::accuracy;
  c.fail("unknown growth metric '" + s + "'");
}

ForestKind parse_forest_kind(const Cursor& c) {
  auto s = c.as_string();
  if (s == "bagged") return ForestKind::bagged;
  if (s == "extra") return ForestKind::extra;
  c.fail("unknown forest kind '" + s + "'");
}

SplitMode parse_split_mode(const Cursor& c) {
  auto s = c.as_string();
  if (s == "exhaustive") return SplitMode::exhaustive;
  if (s == "random_threshold") return SplitMode::random_threshold;
  c.fail("unknown split mode '" + s + "'");
}

ordered_json to_json(const TreeConfig& config) {
  ordered_json j;
  j["max_depth"] = optional_to_json(config.max_depth);
  j["min_samples_leaf"] = config.min_samples_leaf;
  j["min_samples_split"] = config.min_samples_split;
  j["n_candidate_features"] = optional_to_json(config.n_candidate_features);
  j["split_mode"] = to_string(config.split_mode);
  j["seed"] = config.seed;
  return j;
}

TreeConfig parse_tree_config(const Cursor& c) {
  TreeConfig config;
  config.max_depth = c.field("max_depth").as_optional_size();
  config.min_samples_leaf = c.field("min_samples_leaf").as_size();
  config.min_samples_split = c.field("min_samples_split").as_size();
  config.n_candidate_features = c.field("n_candidate_features").as_optional_size();
  config.split_mode = parse_split_mode(c.field("split_mode"));
  config.seed = c.field("seed").as_uint();
  return config;
}

ordered_json to_json(const DecisionTree& tree) {
  ordered_json feature = ordered_json::array(), threshold = ordered_json::array(),
               left = ordered_json::array(), right = ordered_json::array(),
               n_rows = ordered_json::array(), decrease = ordered_json::array();
  for (const auto& node : tree.nodes()) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    left.push_back(node.left);
    right.push_back(node.right);
    n_rows.push_back(node.n_rows);
    decrease.push_back(node.impurity_decrease);
  }
  ordered_json j;
  j["feature"] = std::move(feature);
  j["threshold"] = std::move(threshold);
  j["left"] = std::move(left);
  j["right"] = std::move(right);
  j["n_rows"] = std::move(n_rows);
  j["impurity_decrease"] = std::move(decrease);
  j["leaf_counts"] = tree.leaf_counts();
  return j;
}

DecisionTree parse_tree(const Cursor& c, std::size_t n_classes, std::size_t n_features) {
  const Cursor feature = c.field("feature");
  const Cursor threshold = c.field("threshold");
  const Cursor left = c.field("left");
  const Cursor right = c.field("right");
  const Cursor n_rows = c.field("n_rows");
  const Cursor decrease = c.field("impurity_decrease");
  const Cursor counts = c.field("leaf_counts");
  const std::size_t n = feature.array_size();
  if (n == 0) feature.fail("tree has no nodes");
  for (const Cursor* column : {&threshold, &left, &right, &n_rows, &decrease})
    if (column->array_size() != n) column->fail("length differs from /feature");

  std::vector<TreeNode> nodes(n);
  std::uint32_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode& node = nodes[i];
    const auto f = feature.at(i).as_int();
    if (f < TreeNode::kLeaf || f >= static_cast<std::int64_t>(n_features)) feature.at(i).fail("feature index out of range");
    node.feature = static_cast<std::int32_t>(f);
    node.threshold = threshold.at(i).as_double();
    node.left = left.at(i).as_u32();
    node.right = right.at(i).as_u32();
    node.n_rows = n_rows.at(i).as_u32();
    node.impurity_decrease = decrease.at(i).as_double();
    if (node.is_leaf()) {
      node.counts_offset = offset;
      offset += static_cast<std::uint32_t>(n_classes);
    } else if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
      left.at(i).fail("child index must point after its parent");
    }
  }
  if (counts.array_size() != offset) counts.fail("expected " + std::to_string(offset) + " counts");
  std::vector<std::uint32_t> leaf_counts(offset);
  for (std::size_t i = 0; i < offset; ++i) leaf_counts[i] = counts.at(i).as_u32();
  try {
    return DecisionTree(n_classes, n_features, std::move(nodes), std::move(leaf_counts));
  } catch (const Error& e) {
    c.fail(e.what());
  }
}

ordered_json to_json(const ForestModel& forest) {
  ordered_json j;
  j["kind"] = to_string(forest.config.kind);
  j["n_trees"] = forest.config.n_trees;
  j["seed"] = forest.config.seed;
  j["tree_config"] = to_json(forest.config.tree);
  j["n_classes"] = forest.n_classes;
  j["input_dim"] = forest.input_dim;
  ordered_json trees = ordered_json::array();
  for (const auto& t : forest.trees) trees.push_back(to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

ForestModel parse_forest(const Cursor& c, std::size_t n_classes, std::size_t input_dim) {
  ForestModel forest;
  forest.config.kind = parse_forest_kind(c.field("kind"));
  forest.config.n_trees = c.field("n_trees").as_size();
  forest.config.seed = c.field("seed").as_uint();
  forest.config.tree = parse_tree_config(c.field("tree_config"));
  forest.n_classes = c.field("n_classes").as_size();
  forest.input_dim = c.field("input_dim").as_size();
  if (forest.n_classes != n_classes) c.field("n_classes").fail("does not match the model");
  if (forest.input_dim != input_dim) c.field("input_dim").fail("does not match the layer");
  const Cursor trees = c.field("trees");
  const std::size_t n = trees.array_size();
  if (n != forest.config.n_trees || n == 0) trees.fail("expected n_trees trees");
  for (std::size_t t = 0; t < n; ++t) forest.trees.push_back(parse_tree(trees.at(t), n_classes, input_dim));
  return forest;
}

}  // namespace

ordered_json to_json(const CascadeConfig& config) {
  ordered_json j;
  j["forests_per_layer"] = config.forests_per_layer;
  j["trees_per_forest"] = config.trees_per_forest;
  j["k_folds"] = config.k_folds;
  j["max_layers"] = config.max_layers;
  j["patience"] = config.patience;
  j["improvement_tolerance"] = config.improvement_tolerance;
  j["growth_metric"] = to_string(config.growth_metric);
  j["seed"] = config.seed;
  j["max_depth"] = optional_to_json(config.max_depth);
  j["min_samples_leaf"] = config.min_samples_leaf;
  return j;
}

CascadeConfig cascade_config_from_json(const json& object, const CascadeConfig& defaults) {
  if (!object.is_object()) throw Error(ErrorCode::InvalidConfig, "cascade config must be an object");
  CascadeConfig config = defaults;
  for (const auto& [key, value] : object.items()) {
    const Cursor c(value, "/" + key);
    try {
      if (key == "forests_per_layer") config.forests_per_layer = c.as_size();
      else if (key == "trees_per_forest") config.trees_per_forest = c.as_size();
      else if (key == "k_folds") config.k_folds = c.as_size();
      else if (key == "max_layers") config.max_layers = c.as_size();
      else if (key == "patience") config.patience = c.as_size();
      else if (key == "improvement_tolerance") config.improvement_tolerance = c.as_double();
      else if (key == "growth_metric") config.growth_metric = parse_growth_metric(c);
      else if (key == "seed") config.seed = c.as_uint();
      else if (key == "max_depth") config.max_depth = c.as_optional_size();
      else if (key == "min_samples_leaf") config.min_samples_leaf = c.as_size();
      else throw Error(ErrorCode::InvalidConfig, "unknown cascade config key '" + key + "'");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SchemaViolation) throw Error(ErrorCode::InvalidConfig, e.what());
      throw;
    }
  }
  validate(config);
  return config;
}

std::string serialize_model(const CascadeModel& model) {
  ordered_json j;
  j["format"] = kModelFormatName;
  j["format_version"] = kModelFormatVersion;
  j["n_classes"] = model.n_classes;
  j["input_dim"] = model.input_dim;
  j["class_names"] = model.class_names;
  j["config"] = to_json(model.config);
  ordered_json history;
  history["candidate_metrics"] = model.history.candidate_metrics;
  history["best_layer"] = model.history.best_layer;
  j["history"] = std::move(history);
  ordered_json layers = ordered_json::array();
  for (const auto& layer : model.layers) {
    ordered_json l;
    l["layer_index"] = layer.layer_index;
    l["input_dim"] = layer.input_dim;
    l["validation_metric"] = layer.validation_metric;
    ordered_json forests = ordered_json::array();
    for (const auto& f : layer.forests) forests.push_back(to_json(f));
    l["forests"] = std::move(forests);
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  return j.dump() + "\n";
}

CascadeModel deserialize_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("/: not a well-formed document (") + e.what() + ")");
  }
  const Cursor root(doc, "");
  if (!doc.is_object()) root.fail("expected object");

  const Cursor version = root.field("format_version");
  std::int64_t v = -1;
  if (version.value().is_number_integer()) {
    v = version.value().get<std::int64_t>();
  } else if (version.value().is_string()) {
    try {
      v = std::stoll(version.value().get<std::string>());
    } catch (const std::exception&) {
      version.fail("not a version number");
    }
  } else {
    version.fail("expected integer");
  }
  if (v != kModelFormatVersion)
    throw Error(ErrorCode::UnsupportedVersion,
                "format_version " + std::to_string(v) + " (supported: " + std::to_string(kModelFormatVersion) + ")");
  if (root.field("format").as_string() != kModelFormatName) root.field("format").fail("unexpected format name");

  CascadeModel model;
  model.n_classes = root.field("n_classes").as_size();
  model.input_dim = root.field("input_dim").as_size();
  if (model.n_classes < 2) root.field("n_classes").fail("need at least 2 classes");
  if (model.input_dim < 1) root.field("input_dim").fail("need at least 1 feature");
  const Cursor names = root.field("class_names");
  for (std::size_t i = 0; i < names.array_size(); ++i) model.class_names.push_back(names.at(i).as_string());
  if (model.class_names.size() != model.n_classes) names.fail("expected n_classes names");

  try {
    model.config = cascade_config_from_json(root.field("config").value());
  } catch (const Error& e) {
    root.field("config").fail(e.what());
  }

  const Cursor history = root.field("history");
  const Cursor metrics = history.field("candidate_metrics");
  for (std::size_t i = 0; i < metrics.array_size(); ++i)
    model.history.candidate_metrics.push_back(metrics.at(i).as_double());
  model.history.best_layer = history.field("best_layer").as_size();

  const Cursor layers = root.field("layers");
  const std::size_t n_layers = layers.array_size();
  if (n_layers == 0) layers.fail("model has no layers");
  if (model.history.best_layer + 1 != n_layers || model.history.candidate_metrics.size() < n_layers)
    history.fail("inconsistent with the stored layers");
  const std::size_t augmented = model.augmented_dim();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Cursor lc = layers.at(l);
    LayerModel layer;
    layer.layer_index = lc.field("layer_index").as_size();
    layer.input_dim = lc.field("input_dim").as_size();
    layer.validation_metric = lc.field("validation_metric").as_double();
    if (layer.layer_index != l) lc.field("layer_index").fail("expected " + std::to_string(l));
    if (layer.input_dim != (l == 0 ? model.input_dim : augmented))
      lc.field("input_dim").fail("violates the layer dimension law");
    const Cursor forests = lc.field("forests");
    if (forests.array_size() != model.config.forests_per_layer) forests.fail("expected forests_per_layer forests");
    for (std::size_t f = 0; f < model.config.forests_per_layer; ++f)
      layer.forests.push_back(parse_forest(forests.at(f), model.n_classes, layer.input_dim));
    model.layers.push_back(std::move(layer));
  }
  return model;
}

void save_model(const CascadeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::OutputUnwritable, "cannot write " + path.string());
  out << serialize_model(model);
  if (!out) throw Error(ErrorCode::OutputUnwritable, "write failed for " + path.string());
}

CascadeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(text);
}

}  // namespace treenet
