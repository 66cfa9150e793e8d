#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace freqprint::cli {

struct CommonOptions {
  std::string config_path;           // empty: built-in defaults
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

struct CorpusOptions {
  std::string corpus;  // empty: simulate the configured corpus in memory
  std::string pipeline = "dvfs-freq";
  std::string model = "rf";
};

struct GenerateOptions {
  CommonOptions common;
  std::string out;
};

struct TrainOptions {
  CommonOptions common;
  CorpusOptions data;
  std::string out;
};

struct EvaluateOptions {
  CommonOptions common;
  std::string corpus;
  std::string artifacts;  // directory written by train
  std::string out;
};

struct DetectOptions {
  CommonOptions common;
  CorpusOptions data;
  std::optional<double> threshold;
  std::string out;
};

struct OpenSetOptions {
  CommonOptions common;
  CorpusOptions data;
  std::vector<std::string> holdout;
  std::vector<double> thresholds;
  std::string out;
};

struct InspectOptions {
  CommonOptions common;
  std::string path;
  std::string out;  // empty: stdout
};

int cmd_generate(const GenerateOptions& options);
int cmd_train(const TrainOptions& options);
int cmd_evaluate(const EvaluateOptions& options);
int cmd_detect_latency(const DetectOptions& options);
int cmd_openset(const OpenSetOptions& options);
int cmd_inspect(const InspectOptions& options);

}  // namespace freqprint::cli
