#include "fixtures.hpp"

#include <atomic>
#include <cstdlib>
#include <system_error>

#include <fmt/format.h>
#include <sys/wait.h>
#include <unistd.h>

#include "freqprint/binary_io.hpp"

namespace fixtures {

namespace {

std::vector<freqprint::WorkloadProfile> small_profiles() {
  using freqprint::WorkloadProfile;
  return {
      WorkloadProfile{"idler", {{100.0, 0.05, 0.02}}, {0.8, 0.2}},
      WorkloadProfile{"pulser", {{40.0, 0.9, 0.05}, {40.0, 0.1, 0.05}}, {0.5, 0.5}},
      WorkloadProfile{"spinner", {{100.0, 0.95, 0.02}}, {0.2, 0.8}},
      WorkloadProfile{"stepper", {{200.0, 0.3, 0.05}, {200.0, 0.6, 0.05}}, {0.6, 0.4}},
  };
}

}  // namespace

freqprint::Config small_config(std::uint64_t seed) {
  freqprint::Config c;
  c.seed = seed;
  c.profiles = small_profiles();
  c.corpus.traces_per_app = 8;
  c.corpus.duration_s = 2.0;
  c.preprocess.duration_s = 2.0;
  c.features.n_windows = 20;
  c.features.pca.budget = 60;
  c.model.rf_trees = 10;
  c.model.svm_epochs = 10;
  c.model.knn_k_max = 5;
  c.detect.max_time_s = 2.0;
  c.openset.holdout = {"spinner"};
  c.openset.thresholds = {0.0, 0.25, 0.5, 0.75, 1.0};
  return c;
}

std::string small_config_toml(std::uint64_t seed, const std::string& holdout) {
  return fmt::format(R"(seed = {}

[corpus]
traces_per_app = 8
duration_s = 2.0

[preprocess]
duration_s = 2.0

[features]
n_windows = 20
pca_budget = 60

[model]
rf_trees = 10
svm_epochs = 10
knn_k_max = 5

[detect]
max_time_s = 2.0

[openset]
holdout = [{}]
thresholds = [0.0, 0.25, 0.5, 0.75, 1.0]

[[profile]]
label = "idler"
affinity = [0.8, 0.2]
segments = [[100.0, 0.05, 0.02]]

[[profile]]
label = "pulser"
affinity = [0.5, 0.5]
segments = [[40.0, 0.9, 0.05], [40.0, 0.1, 0.05]]

[[profile]]
label = "spinner"
affinity = [0.2, 0.8]
segments = [[100.0, 0.95, 0.02]]

[[profile]]
label = "stepper"
affinity = [0.6, 0.4]
segments = [[200.0, 0.3, 0.05], [200.0, 0.6, 0.05]]
)",
                     seed, holdout.empty() ? std::string() : fmt::format("\"{}\"", holdout));
}

freqprint::FeatureMatrix blobs(std::size_t n_classes, std::size_t per_class, std::size_t dims,
                               double spread, double separation, std::uint64_t seed) {
  freqprint::Rng rng(seed);
  Eigen::MatrixXd centres(static_cast<Eigen::Index>(n_classes), static_cast<Eigen::Index>(dims));
  for (Eigen::Index c = 0; c < centres.rows(); ++c)
    for (Eigen::Index j = 0; j < centres.cols(); ++j) centres(c, j) = rng.uniform(-separation, separation);
  freqprint::FeatureMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(n_classes * per_class), static_cast<Eigen::Index>(dims));
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto r = static_cast<Eigen::Index>(c * per_class + i);
      for (Eigen::Index j = 0; j < m.rows.cols(); ++j) {
        m.rows(r, j) = centres(static_cast<Eigen::Index>(c), j) + spread * rng.normal();
      }
      m.labels.push_back(static_cast<int>(c));
    }
  }
  return m;
}

oracle::Matrix to_rows(const Eigen::MatrixXd& m) {
  oracle::Matrix out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files[std::filesystem::relative(entry.path(), root).generic_string()] =
        freqprint::read_text_file(entry.path());
  }
  return files;
}

RunResult run_program(const std::string& program, const std::string& args) {
  TempDir scratch("run");
  const auto log = scratch.path() / "output.txt";
  const auto command = fmt::format("\"{}\" {} > \"{}\" 2>&1", program, args, log.string());
  const int status = std::system(command.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = freqprint::read_text_file(log);
  return r;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          fmt::format("freqprint-{}-{}-{}", tag, ::getpid(), counter++);
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace fixtures
