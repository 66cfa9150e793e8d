#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "freqprint/error.hpp"

namespace {

using namespace freqprint::cli;

void add_common(CLI::App& cmd, CommonOptions& common) {
  cmd.add_option("--config", common.config_path, "TOML configuration file (defaults when omitted)")
      ->check(CLI::ExistingFile);
  cmd.add_option("--seed", common.seed, "Override the configured seed");
}

void add_corpus(CLI::App& cmd, CorpusOptions& data) {
  cmd.add_option("--corpus", data.corpus,
                 "Corpus directory written by generate (simulated in memory when omitted)");
  cmd.add_option("--pipeline", data.pipeline, "Feature pipeline")
      ->check(CLI::IsMember({"dvfs-time", "dvfs-freq", "em-freq"}));
  cmd.add_option("--model", data.model, "Classifier")->check(CLI::IsMember({"knn", "svm", "rf"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Application fingerprinting from DVFS and EM side-channel traces"};
  app.require_subcommand(1);

  GenerateOptions generate;
  auto* gen = app.add_subcommand("generate", "Simulate a labelled corpus and write it to disk");
  add_common(*gen, generate.common);
  gen->add_option("--out", generate.out, "Corpus directory (must be empty or absent)")->required();

  TrainOptions train;
  auto* tr = app.add_subcommand("train", "Split, fit PCA, train and evaluate one pipeline/model pair");
  add_common(*tr, train.common);
  add_corpus(*tr, train.data);
  tr->add_option("--out", train.out, "Artifact directory")->required();

  EvaluateOptions evaluate;
  auto* ev = app.add_subcommand("evaluate", "Score trained artifacts on a corpus");
  add_common(*ev, evaluate.common);
  ev->add_option("--corpus", evaluate.corpus, "Corpus directory (simulated when omitted)");
  ev->add_option("--artifacts", evaluate.artifacts, "Directory written by train")->required();
  ev->add_option("--out", evaluate.out, "Report directory")->required();

  DetectOptions detect;
  auto* dl = app.add_subcommand("detect-latency", "Per-application detection time over window prefixes");
  add_common(*dl, detect.common);
  add_corpus(*dl, detect.data);
  dl->add_option("--threshold", detect.threshold, "Per-application accuracy that counts as detected")
      ->check(CLI::Range(0.0, 1.0));
  dl->add_option("--out", detect.out, "Report directory")->required();

  OpenSetOptions openset;
  auto* os = app.add_subcommand("openset", "Unknown-application detection over a threshold sweep");
  add_common(*os, openset.common);
  add_corpus(*os, openset.data);
  os->add_option("--holdout", openset.holdout, "Applications withheld from training")->delimiter(',');
  os->add_option("--thresholds", openset.thresholds, "Decision thresholds in [0, 1]")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  os->add_option("--out", openset.out, "Report directory")->required();

  InspectOptions inspect;
  auto* in = app.add_subcommand("inspect", "Describe a corpus, DVFS log, EM trace or artifact");
  add_common(*in, inspect.common);
  in->add_option("path", inspect.path, "Path to inspect")->required();
  in->add_option("--out", inspect.out, "Write the description here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(generate);
    if (tr->parsed()) return cmd_train(train);
    if (ev->parsed()) return cmd_evaluate(evaluate);
    if (dl->parsed()) return cmd_detect_latency(detect);
    if (os->parsed()) return cmd_openset(openset);
    if (in->parsed()) return cmd_inspect(inspect);
  } catch (const freqprint::Error& e) {
    std::fputs(fmt::format("freqprint: {}\n", e.what()).c_str(), stderr);
    return 1;
  } catch (const std::exception& e) {
    std::fputs(fmt::format("freqprint: unexpected failure: {}\n", e.what()).c_str(), stderr);
    return 1;
  }
  return 1;
}
