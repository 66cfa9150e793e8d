#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "freqprint/config.hpp"
#include "freqprint/core_model.hpp"
#include "freqprint/rng.hpp"
#include "oracles.hpp"

namespace fixtures {

/// Four short, well-separated profiles on a 2 s capture with 20 windows of
/// 100 ms. Small enough for unit tests to featurize in well under a second.
freqprint::Config small_config(std::uint64_t seed = 7);

/// TOML text equivalent to small_config(seed) with the given holdout.
std::string small_config_toml(std::uint64_t seed = 7, const std::string& holdout = "spinner");

/// Gaussian blobs, one centre per class, `per_class` rows each.
freqprint::FeatureMatrix blobs(std::size_t n_classes, std::size_t per_class, std::size_t dims,
                               double spread, double separation, std::uint64_t seed);

/// Relative path -> contents of every regular file below root.
std::map<std::string, std::string> read_tree(const std::filesystem::path& root);

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

/// Runs `program args` through the shell.
RunResult run_program(const std::string& program, const std::string& args);

oracle::Matrix to_rows(const Eigen::MatrixXd& m);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
