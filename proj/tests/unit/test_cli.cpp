#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "treenet/dataset.hpp"

using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

// Runs the CLI with stdout captured to a file and stderr discarded.
Run cli(const test::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const std::string cmd = std::string("\"") + TREENET_CLI_PATH + "\" " + args + " > \"" + out.string() +
                          "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("cli usage errors exit 1") {
  test::TempDir dir("cli_usage");
  CHECK(cli(dir, "").code == 1);
  CHECK(cli(dir, "frobnicate").code == 1);
  CHECK(cli(dir, "train --data x.csv").code == 1);
  CHECK(cli(dir, "--help").code == 0);
  CHECK(cli(dir, "nn-cost --widths 3,4,0").code == 1);
  CHECK(cli(dir, "nn-cost --layers 2").code == 1);
}

TEST_CASE("cli nn-cost") {
  test::TempDir dir("cli_cost");
  Run r = cli(dir, "nn-cost --layers 2 --neurons 10");
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["inference"] == 240);
  r = cli(dir, "nn-cost --layers 1 --neurons 1 --epochs 2 --dataset-size 100 --batch-size 10 --widths 3,4,2");
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["training"] == 140.0);
  CHECK(doc["forward"] == 20);
  CHECK(doc["total"] == 80);  // 2 * E * forward with E = 2
}

TEST_CASE("cli train, predict, evaluate, bench-fps") {
  test::TempDir dir("cli_flow");
  const treenet::Dataset ds = treenet::make_blobs(3, 15, 3, 1.0, 4);
  treenet::write_csv(ds, dir / "train.csv", "label");
  test::write_text(dir / "cfg.json", R"({"forests_per_layer": 2, "trees_per_forest": 3, "max_layers": 2})");

  const std::string model = q(dir / "model.json");
  REQUIRE(cli(dir, "train --data " + q(dir / "train.csv") + " --config " + q(dir / "cfg.json") +
                       " --seed 7 --out " + model)
              .code == 0);
  CHECK(std::filesystem::exists(dir / "model.json"));

  Run r = cli(dir, "predict --model " + model + " --data " + q(dir / "train.csv"));
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == ds.size() + 1);
  CHECK(r.out.rfind("prediction,p_class_0,p_class_1,p_class_2\n", 0) == 0);

  // Features only, no label column.
  test::write_text(dir / "probe.csv", "f0,f1,f2\n0,0,0\n4,0,0\n");
  r = cli(dir, "predict --model " + model + " --data " + q(dir / "probe.csv"));
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 3);

  r = cli(dir, "evaluate --model " + model + " --data " + q(dir / "train.csv"));
  REQUIRE(r.code == 0);
  const json metrics = json::parse(r.out);
  CHECK(metrics["n_samples"] == ds.size());
  CHECK(metrics["accuracy"].get<double>() > 0.5);

  r = cli(dir, "bench-fps --model " + model + " --data " + q(dir / "probe.csv") + " --repeats 2");
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["pass_fps"].size() == 2);

  SUBCASE("data errors exit 2") {
    test::write_text(dir / "wide.csv", "a,b\n1,2\n");
    CHECK(cli(dir, "predict --model " + model + " --data " + q(dir / "wide.csv")).code == 2);
    CHECK(cli(dir, "evaluate --model " + model + " --data " + q(dir / "probe.csv")).code == 2);
    test::write_text(dir / "bad.csv", "f0,label\nabc,x\n1,y\n");
    CHECK(cli(dir, "train --data " + q(dir / "bad.csv") + " --out " + q(dir / "m2.json")).code == 2);
    CHECK(cli(dir, "train --data " + q(dir / "train.csv") + " --label-column y --out " + q(dir / "m2.json"))
              .code == 2);
    test::write_text(dir / "future.json", R"({"format": "treenet.cascade", "format_version": "999"})");
    CHECK(cli(dir, "predict --model " + q(dir / "future.json") + " --data " + q(dir / "probe.csv")).code == 2);
    CHECK(cli(dir, "predict --model " + q(dir / "missing.json") + " --data " + q(dir / "probe.csv")).code == 2);
  }
  SUBCASE("config errors exit 1") {
    test::write_text(dir / "typo.json", R"({"trees_per_forst": 3})");
    CHECK(cli(dir, "train --data " + q(dir / "train.csv") + " --config " + q(dir / "typo.json") + " --out " +
                       q(dir / "m3.json"))
              .code == 1);
  }
}

TEST_CASE("cli experiment and featurize") {
  test::TempDir dir("cli_exp");
  test::write_text(dir / "exp.json", R"({
    "format_version": 1,
    "data": {"kind": "blobs", "n_classes": 2, "n_per_class": 20, "d": 2, "spread": 1.0, "seed": 3},
    "repeats": 1,
    "fps_repeats": 1,
    "cascade": {"forests_per_layer": 2, "trees_per_forest": 3, "max_layers": 2}
  })");
  Run r = cli(dir, "experiment --config " + q(dir / "exp.json") + " --fractions 0.5,1.0 --out " +
                       q(dir / "report"));
  REQUIRE(r.code == 0);
  std::ifstream table(dir / "report.csv");
  std::string header;
  std::getline(table, header);
  CHECK(header == "chunk,size,train_seconds,accuracy,precision_weighted,recall_weighted,f1_weighted,mcc,fps");
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(cli(dir, "experiment --config " + q(dir / "exp.json") + " --fractions 1.0,0.5").code == 1);

  // Two 3x3 images per class.
  for (const char* cls : {"a", "b"}) {
    std::filesystem::create_directories(dir / "img" / cls);
    for (int i = 0; i < 2; ++i) {
      std::string ppm = "P6\n3 3\n255\n";
      for (int p = 0; p < 9; ++p) ppm += std::string(3, static_cast<char>(cls[0] == 'a' ? 10 * p + i : 200 - p));
      test::write_text(dir / "img" / cls / ("x" + std::to_string(i) + ".ppm"), ppm);
    }
  }
  REQUIRE(cli(dir, "featurize --images " + q(dir / "img") + " --out " + q(dir / "img.csv")).code == 0);
  const treenet::Dataset featurized = treenet::load_csv(dir / "img.csv");
  CHECK(featurized.size() == 4);
  CHECK(featurized.n_features() == 129);
  CHECK(cli(dir, "featurize --images " + q(dir / "nope") + " --out " + q(dir / "x.csv")).code == 2);
}
