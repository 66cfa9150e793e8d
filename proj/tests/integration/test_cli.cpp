#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "freqprint/binary_io.hpp"

namespace fs = std::filesystem;
using fixtures::run_program;

namespace {

const std::string kCli = FREQPRINT_CLI_PATH;

struct Workspace {
  fixtures::TempDir dir{"cli"};
  fs::path config = dir.path() / "small.toml";

  explicit Workspace(const std::string& holdout = "spinner") {
    freqprint::write_text_file(config, fixtures::small_config_toml(7, holdout));
  }

  std::string at(const std::string& name) const { return (dir.path() / name).string(); }
  fixtures::RunResult run(const std::string& args) const {
    return run_program(kCli, args + " --config " + config.string());
  }
};

}  // namespace

TEST_CASE("usage errors exit nonzero") {
  CHECK(run_program(kCli, "").exit_code != 0);
  CHECK(run_program(kCli, "frobnicate").exit_code != 0);
  CHECK(run_program(kCli, "train --out x --pipeline audio").exit_code != 0);
  CHECK(run_program(kCli, "train --out x --config /nonexistent.toml").exit_code != 0);
  CHECK(run_program(kCli, "--help").exit_code == 0);
}

TEST_CASE("generate writes a readable corpus and refuses to overwrite it") {
  Workspace ws;
  const auto r = ws.run("generate --out " + ws.at("corpus"));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(r.output.find("generated 32 traces across 4 applications") != std::string::npos);
  const auto manifest = nlohmann::json::parse(freqprint::read_text_file(ws.at("corpus/manifest.json")));
  CHECK(manifest["entries"].size() == 32);

  const auto again = ws.run("generate --out " + ws.at("corpus"));
  CHECK(again.exit_code == 1);
  CHECK(again.output.find("not empty") != std::string::npos);

  const auto inspect = ws.run("inspect " + ws.at("corpus"));
  REQUIRE(inspect.exit_code == 0);
  const auto doc = nlohmann::json::parse(inspect.output);
  CHECK(doc["kind"] == "corpus");
  CHECK(doc["traces"] == 32);
  CHECK(doc["applications"]["pulser"] == 8);

  const auto log = ws.run("inspect " + ws.at("corpus/pulser/trace_000.cluster1.csv"));
  REQUIRE(log.exit_code == 0);
  CHECK(nlohmann::json::parse(log.output)["kind"] == "dvfs-log");
}

TEST_CASE("seed override changes the corpus") {
  Workspace ws;
  REQUIRE(ws.run("generate --out " + ws.at("a")).exit_code == 0);
  REQUIRE(ws.run("generate --seed 8 --out " + ws.at("b")).exit_code == 0);
  CHECK(fixtures::read_tree(ws.at("a")) != fixtures::read_tree(ws.at("b")));
}

TEST_CASE("train, evaluate and inspect artifacts") {
  Workspace ws;
  REQUIRE(ws.run("generate --out " + ws.at("corpus")).exit_code == 0);
  const auto train = ws.run("train --corpus " + ws.at("corpus") + " --pipeline dvfs-freq --model rf --out " + ws.at("model"));
  REQUIRE_MESSAGE(train.exit_code == 0, train.output);
  CHECK(train.output.find("accuracy") != std::string::npos);
  for (const auto* f : {"model.bin", "pca.bin", "model.json", "metrics.json", "confusion.csv", "predictions.csv"}) {
    CHECK_MESSAGE(fs::exists(ws.at(std::string("model/") + f)), f);
  }
  const auto metrics = nlohmann::json::parse(freqprint::read_text_file(ws.at("model/metrics.json")));
  CHECK(metrics["n_train"] == 24);
  CHECK(metrics["n_test"] == 8);
  CHECK(metrics["accuracy"].get<double>() >= 0.75);

  const auto eval = ws.run("evaluate --corpus " + ws.at("corpus") + " --artifacts " + ws.at("model") + " --out " + ws.at("eval"));
  REQUIRE_MESSAGE(eval.exit_code == 0, eval.output);
  CHECK(fs::exists(ws.at("eval/metrics.json")));

  const auto model = ws.run("inspect " + ws.at("model/model.bin"));
  REQUIRE(model.exit_code == 0);
  CHECK(nlohmann::json::parse(model.output)["model"] == "rf");
  const auto pca = ws.run("inspect " + ws.at("model/pca.bin"));
  REQUIRE(pca.exit_code == 0);
  CHECK(nlohmann::json::parse(pca.output)["kind"] == "pca");

  CHECK(ws.run("evaluate --artifacts " + ws.at("nowhere") + " --out " + ws.at("e2")).exit_code == 1);
}

TEST_CASE("in-memory corpus gives the same training results as the generated one") {
  Workspace ws;
  REQUIRE(ws.run("generate --out " + ws.at("corpus")).exit_code == 0);
  REQUIRE(ws.run("train --corpus " + ws.at("corpus") + " --model knn --out " + ws.at("disk")).exit_code == 0);
  REQUIRE(ws.run("train --model knn --out " + ws.at("memory")).exit_code == 0);
  CHECK(fixtures::read_tree(ws.at("disk")) == fixtures::read_tree(ws.at("memory")));
}

TEST_CASE("detect-latency reports") {
  Workspace ws;
  const auto r = ws.run("detect-latency --model knn --out " + ws.at("det"));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto csv = freqprint::read_text_file(ws.at("det/detection.csv"));
  CHECK(csv.rfind("app,detection_time_s,detected\n", 0) == 0);
  const auto curve = freqprint::read_text_file(ws.at("det/accuracy_curve.csv"));
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 21);
  CHECK(fs::exists(ws.at("det/summary.json")));

  const auto zero = ws.run("detect-latency --model knn --threshold 0 --out " + ws.at("det0"));
  REQUIRE(zero.exit_code == 0);
  const auto zero_csv = freqprint::read_text_file(ws.at("det0/detection.csv"));
  for (const auto* app : {"idler", "pulser", "spinner", "stepper"}) {
    CHECK(zero_csv.find(std::string(app) + ",0.1,1\n") != std::string::npos);
  }
  CHECK(ws.run("detect-latency --threshold 1.5 --out " + ws.at("det1")).exit_code != 0);
}

TEST_CASE("openset sweep and its argument errors") {
  Workspace ws;
  const auto r = ws.run("openset --out " + ws.at("os"));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto csv = freqprint::read_text_file(ws.at("os/openset.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  const auto summary = nlohmann::json::parse(freqprint::read_text_file(ws.at("os/summary.json")));
  CHECK(summary["holdout"] == nlohmann::json::array({"spinner"}));
  CHECK(summary["n_unknown_test"] == 8);

  Workspace empty_holdout("");
  const auto none = empty_holdout.run("openset --out " + empty_holdout.at("os"));
  CHECK(none.exit_code == 1);
  CHECK_FALSE(fs::exists(empty_holdout.at("os")));

  const auto all = ws.run("openset --holdout idler,pulser,spinner,stepper --out " + ws.at("all"));
  CHECK(all.exit_code == 1);
  CHECK(all.output.find("nothing to train") != std::string::npos);

  const auto unknown = ws.run("openset --holdout nosuchapp --out " + ws.at("unk"));
  CHECK(unknown.exit_code == 1);
  CHECK(unknown.output.find("nosuchapp") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.at("unk")));
}

TEST_CASE("training a single-class corpus with SVM fails cleanly") {
  fixtures::TempDir dir("cli-single");
  const auto config = dir.path() / "one.toml";
  freqprint::write_text_file(config,
                             "[corpus]\ntraces_per_app = 4\nduration_s = 1.0\n[preprocess]\nduration_s = 1.0\n"
                             "[features]\nn_windows = 10\n[[profile]]\nlabel = \"solo\"\nsegments = [[50.0, 0.5, 0.05]]\n"
                             "affinity = [0.5, 0.5]\n");
  const auto r = run_program(kCli, "train --model svm --config " + config.string() + " --out " + (dir.path() / "m").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("class") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "m"));
}
