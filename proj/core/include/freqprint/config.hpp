#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "freqprint/core_model.hpp"
#include "freqprint/features.hpp"
#include "freqprint/governor.hpp"
#include "freqprint/ml.hpp"

namespace freqprint {

struct CorpusConfig {
  std::size_t traces_per_app = 40;
  double duration_s = 10.0;
  SimulationOptions simulation = moderate_noise();

  static SimulationOptions moderate_noise() noexcept {
    SimulationOptions o;
    o.background_noise = 0.05;
    o.duration_jitter = 0.3;
    return o;
  }
};

struct EmConfig {
  bool enabled = false;
  double sample_rate_hz = 5000.0;
  double noise_std = 0.5;
  EmSynthesisConfig synthesis;
};

struct PreprocessConfig {
  double dt_us = 500.0;
  double duration_s = 10.0;
  double split_ratio = 0.75;
};

struct FeatureConfig {
  double window_ms = 100.0;
  std::size_t n_windows = 100;
  Taper taper = Taper::Rectangular;
  PcaOptions pca;
};

struct ModelConfig {
  std::size_t knn_k = 0;  // 0 sweeps k over [knn_k_min, knn_k_max] on a validation fold
  std::size_t knn_k_min = 1;
  std::size_t knn_k_max = 20;
  double svm_c = 1.0;
  std::size_t svm_epochs = 40;
  std::size_t rf_trees = 40;
  bool rf_bootstrap = true;
  std::size_t rf_max_features = 0;
};

struct DetectConfig {
  double accuracy_threshold = 0.8;
  double max_time_s = 10.0;
};

struct OpenSetConfig {
  std::vector<double> thresholds;  // empty means 0.00, 0.05, ..., 1.00
  std::vector<std::string> holdout = {"kernel_dijkstra", "kernel_fft", "kernel_qsort", "kernel_sha"};
};

struct Config {
  std::uint64_t seed = 1;
  FrequencyTables tables = default_tables();
  GovernorConfig governor;
  CorpusConfig corpus;
  EmConfig em;
  PreprocessConfig preprocess;
  FeatureConfig features;
  ModelConfig model;
  DetectConfig detect;
  OpenSetConfig openset;
  std::vector<WorkloadProfile> profiles = builtin_profiles();
};

/// Parses a TOML document; unset keys keep their defaults. Throws ConfigError
/// for syntax errors, unknown keys, wrong types and values that fail
/// validation.
Config parse_config(std::string_view text, std::string_view source = "<config>");
Config load_config(const std::filesystem::path& path);

void validate_config(const Config& config);

std::vector<double> openset_thresholds(const OpenSetConfig& config);

}  // namespace freqprint
