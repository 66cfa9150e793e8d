#include "freqprint/config.hpp"

#include <cmath>
#include <initializer_list>
#include <set>

#include <fmt/format.h>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "freqprint/binary_io.hpp"
#include "freqprint/error.hpp"

namespace freqprint {

namespace {

[[noreturn]] void fail(std::string_view where, std::string_view what) {
  throw Error(ErrorCode::ConfigError, fmt::format("{}: {}", where, what));
}

void only_keys(const toml::table& table, std::string_view where,
               std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : table) {
    bool known = false;
    for (auto a : allowed) known = known || key.str() == a;
    if (!known) fail(where, fmt::format("unknown key '{}'", key.str()));
  }
}

const toml::table* section(const toml::table& root, std::string_view name) {
  const auto* node = root.get(name);
  if (node == nullptr) return nullptr;
  const auto* table = node->as_table();
  if (table == nullptr) fail(name, "expected a table");
  return table;
}

double as_number(const toml::node& node, std::string_view where) {
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* i = node.as_integer()) return static_cast<double>(i->get());
  fail(where, "expected a number");
}

std::int64_t as_integer(const toml::node& node, std::string_view where) {
  if (const auto* i = node.as_integer()) return i->get();
  fail(where, "expected an integer");
}

void read(const toml::table& t, std::string_view sec, std::string_view key, double& out) {
  if (const auto* n = t.get(key)) out = as_number(*n, fmt::format("{}.{}", sec, key));
}

void read(const toml::table& t, std::string_view sec, std::string_view key, std::size_t& out) {
  if (const auto* n = t.get(key)) {
    const auto v = as_integer(*n, fmt::format("{}.{}", sec, key));
    if (v < 0) fail(fmt::format("{}.{}", sec, key), "must be non-negative");
    out = static_cast<std::size_t>(v);
  }
}

void read(const toml::table& t, std::string_view sec, std::string_view key, std::int64_t& out) {
  if (const auto* n = t.get(key)) out = as_integer(*n, fmt::format("{}.{}", sec, key));
}

void read(const toml::table& t, std::string_view sec, std::string_view key, bool& out) {
  if (const auto* n = t.get(key)) {
    const auto* b = n->as_boolean();
    if (b == nullptr) fail(fmt::format("{}.{}", sec, key), "expected a boolean");
    out = b->get();
  }
}

const toml::array& as_array(const toml::node& node, std::string_view where) {
  const auto* a = node.as_array();
  if (a == nullptr) fail(where, "expected an array");
  return *a;
}

std::vector<double> number_list(const toml::node& node, std::string_view where) {
  std::vector<double> out;
  for (const auto& item : as_array(node, where)) out.push_back(as_number(item, where));
  return out;
}

FrequencyTable read_table(const toml::node& node, int cluster, std::string_view where) {
  std::vector<FreqKhz> levels;
  for (const auto& item : as_array(node, where)) {
    const auto v = as_integer(item, where);
    if (v <= 0 || v > 0xFFFFFFFFLL) fail(where, "frequency out of range");
    levels.push_back(static_cast<FreqKhz>(v));
  }
  try {
    return FrequencyTable(cluster, std::move(levels));
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

WorkloadProfile read_profile(const toml::table& t, std::size_t index) {
  const auto where = fmt::format("profile[{}]", index);
  only_keys(t, where, {"label", "affinity", "segments"});
  WorkloadProfile p;
  const auto* label = t.get("label");
  if (label == nullptr || !label->is_string()) fail(where, "label must be a string");
  p.app_label = label->as_string()->get();
  if (const auto* a = t.get("affinity")) p.affinity = number_list(*a, where + ".affinity");
  const auto* segs = t.get("segments");
  if (segs == nullptr) fail(where, "segments are required");
  for (const auto& seg : as_array(*segs, where + ".segments")) {
    const auto values = number_list(seg, where + ".segments");
    if (values.size() != 3) fail(where, "segment must be [duration_ms, utilization, jitter_std]");
    p.segments.push_back({values[0], values[1], values[2]});
  }
  return p;
}

void apply(const toml::table& root, Config& c) {
  only_keys(root, "config",
            {"seed", "tables", "governor", "polling", "corpus", "em", "preprocess", "features",
             "model", "detect", "openset", "profile"});
  if (const auto* n = root.get("seed")) {
    const auto v = as_integer(*n, "seed");
    if (v < 0) fail("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(v);
  }

  if (const auto* t = section(root, "tables")) {
    FrequencyTables tables;
    for (std::size_t i = 0;; ++i) {
      const auto key = fmt::format("cluster{}", i);
      const auto* n = t->get(key);
      if (n == nullptr) break;
      tables.push_back(read_table(*n, static_cast<int>(i), "tables." + key));
    }
    if (tables.size() != t->size()) fail("tables", "keys must be cluster0, cluster1, ... without gaps");
    if (tables.empty()) fail("tables", "at least one cluster is required");
    c.tables = std::move(tables);
  }

  if (const auto* t = section(root, "governor")) {
    only_keys(*t, "governor",
              {"sampling_interval_ms", "up_threshold", "down_scale_factor", "initial_level"});
    read(*t, "governor", "sampling_interval_ms", c.governor.sampling_interval_ms);
    read(*t, "governor", "up_threshold", c.governor.up_threshold);
    read(*t, "governor", "down_scale_factor", c.governor.down_scale_factor);
    read(*t, "governor", "initial_level", c.governor.initial_level);
  }

  auto& sim = c.corpus.simulation;
  if (const auto* t = section(root, "polling")) {
    only_keys(*t, "polling", {"delay_us", "jitter_us", "read_latency_us"});
    read(*t, "polling", "delay_us", sim.polling.delay_us);
    read(*t, "polling", "jitter_us", sim.polling.jitter_us);
    read(*t, "polling", "read_latency_us", sim.polling.read_latency_us);
  }

  if (const auto* t = section(root, "corpus")) {
    only_keys(*t, "corpus",
              {"traces_per_app", "duration_s", "background_noise", "duration_jitter", "random_phase"});
    read(*t, "corpus", "traces_per_app", c.corpus.traces_per_app);
    read(*t, "corpus", "duration_s", c.corpus.duration_s);
    read(*t, "corpus", "background_noise", sim.background_noise);
    read(*t, "corpus", "duration_jitter", sim.duration_jitter);
    read(*t, "corpus", "random_phase", sim.random_phase);
  }

  if (const auto* t = section(root, "em")) {
    only_keys(*t, "em",
              {"enabled", "sample_rate_hz", "noise_std", "amplitude", "base_carrier_hz",
               "carrier_step_hz"});
    read(*t, "em", "enabled", c.em.enabled);
    read(*t, "em", "sample_rate_hz", c.em.sample_rate_hz);
    read(*t, "em", "noise_std", c.em.noise_std);
    read(*t, "em", "amplitude", c.em.synthesis.amplitude);
    read(*t, "em", "base_carrier_hz", c.em.synthesis.base_carrier_hz);
    read(*t, "em", "carrier_step_hz", c.em.synthesis.carrier_step_hz);
  }

  if (const auto* t = section(root, "preprocess")) {
    only_keys(*t, "preprocess", {"dt_us", "duration_s", "split_ratio"});
    read(*t, "preprocess", "dt_us", c.preprocess.dt_us);
    read(*t, "preprocess", "duration_s", c.preprocess.duration_s);
    read(*t, "preprocess", "split_ratio", c.preprocess.split_ratio);
  }

  if (const auto* t = section(root, "features")) {
    only_keys(*t, "features",
              {"window_ms", "n_windows", "taper", "pca_budget", "per_window_max",
               "variance_threshold"});
    read(*t, "features", "window_ms", c.features.window_ms);
    read(*t, "features", "n_windows", c.features.n_windows);
    if (const auto* n = t->get("taper")) {
      const auto* s = n->as_string();
      if (s == nullptr) fail("features.taper", "expected a string");
      if (s->get() == "rectangular") {
        c.features.taper = Taper::Rectangular;
      } else if (s->get() == "hann") {
        c.features.taper = Taper::Hann;
      } else {
        fail("features.taper", "expected \"rectangular\" or \"hann\"");
      }
    }
    read(*t, "features", "pca_budget", c.features.pca.budget);
    read(*t, "features", "per_window_max", c.features.pca.per_window_max);
    read(*t, "features", "variance_threshold", c.features.pca.variance_threshold);
  }

  if (const auto* t = section(root, "model")) {
    only_keys(*t, "model",
              {"knn_k", "knn_k_min", "knn_k_max", "svm_c", "svm_epochs", "rf_trees", "rf_bootstrap",
               "rf_max_features"});
    read(*t, "model", "knn_k", c.model.knn_k);
    read(*t, "model", "knn_k_min", c.model.knn_k_min);
    read(*t, "model", "knn_k_max", c.model.knn_k_max);
    read(*t, "model", "svm_c", c.model.svm_c);
    read(*t, "model", "svm_epochs", c.model.svm_epochs);
    read(*t, "model", "rf_trees", c.model.rf_trees);
    read(*t, "model", "rf_bootstrap", c.model.rf_bootstrap);
    read(*t, "model", "rf_max_features", c.model.rf_max_features);
  }

  if (const auto* t = section(root, "detect")) {
    only_keys(*t, "detect", {"accuracy_threshold", "max_time_s"});
    read(*t, "detect", "accuracy_threshold", c.detect.accuracy_threshold);
    read(*t, "detect", "max_time_s", c.detect.max_time_s);
  }

  if (const auto* t = section(root, "openset")) {
    only_keys(*t, "openset", {"thresholds", "holdout"});
    if (const auto* n = t->get("thresholds")) c.openset.thresholds = number_list(*n, "openset.thresholds");
    if (const auto* n = t->get("holdout")) {
      c.openset.holdout.clear();
      for (const auto& item : as_array(*n, "openset.holdout")) {
        const auto* s = item.as_string();
        if (s == nullptr) fail("openset.holdout", "expected strings");
        c.openset.holdout.push_back(s->get());
      }
    }
  }

  if (const auto* n = root.get("profile")) {
    const auto* arr = n->as_array();
    if (arr == nullptr || !arr->is_array_of_tables()) fail("profile", "expected [[profile]] tables");
    c.profiles.clear();
    std::size_t i = 0;
    for (const auto& item : *arr) c.profiles.push_back(read_profile(*item.as_table(), i++));
  }
}

}  // namespace

void validate_config(const Config& c) {
  auto check = [](bool ok, std::string_view where, std::string_view what) {
    if (!ok) fail(where, what);
  };
  try {
    validate_governor(c.governor);
    if (c.profiles.empty()) throw Error(ErrorCode::EmptyProfileList, "no workload profiles");
    std::set<std::string> seen;
    for (const auto& p : c.profiles) {
      validate_profile(p, c.tables.size());
      check(seen.insert(p.app_label).second, "profile", fmt::format("duplicate label '{}'", p.app_label));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail("config", e.what());
  }
  const auto& sim = c.corpus.simulation;
  check(c.corpus.traces_per_app >= 1, "corpus.traces_per_app", "must be >= 1");
  check(c.corpus.duration_s > 0.0, "corpus.duration_s", "must be positive");
  check(sim.background_noise >= 0.0, "corpus.background_noise", "must be non-negative");
  check(sim.duration_jitter >= 0.0 && sim.duration_jitter < 1.0, "corpus.duration_jitter",
        "must lie in [0, 1)");
  check(sim.polling.delay_us >= 1, "polling.delay_us", "must be >= 1");
  check(sim.polling.jitter_us >= 0, "polling.jitter_us", "must be >= 0");
  check(sim.polling.read_latency_us >= 1 && sim.polling.read_latency_us < sim.polling.delay_us,
        "polling.read_latency_us", "must lie in [1, delay_us)");
  check(c.em.sample_rate_hz > 0.0, "em.sample_rate_hz", "must be positive");
  check(c.em.noise_std >= 0.0, "em.noise_std", "must be non-negative");
  if (c.em.enabled) {
    check(c.em.sample_rate_hz >= 2.0 * highest_carrier_hz(c.em.synthesis, c.tables), "em.sample_rate_hz",
          "below twice the highest carrier frequency");
  }
  check(c.preprocess.dt_us > 0.0, "preprocess.dt_us", "must be positive");
  check(c.preprocess.duration_s > 0.0, "preprocess.duration_s", "must be positive");
  check(c.preprocess.split_ratio > 0.0 && c.preprocess.split_ratio < 1.0, "preprocess.split_ratio",
        "must lie in (0, 1)");
  check(c.features.window_ms > 0.0, "features.window_ms", "must be positive");
  check(c.features.n_windows >= 1, "features.n_windows", "must be >= 1");
  check(c.features.window_ms * static_cast<double>(c.features.n_windows) <=
            c.preprocess.duration_s * 1000.0 + 1e-9,
        "features", "window_ms x n_windows exceeds the preprocessing duration");
  check(c.features.pca.budget >= c.features.n_windows, "features.pca_budget", "must be >= n_windows");
  check(c.features.pca.per_window_max >= 1, "features.per_window_max", "must be >= 1");
  check(c.features.pca.variance_threshold > 0.0 && c.features.pca.variance_threshold <= 1.0,
        "features.variance_threshold", "must lie in (0, 1]");
  check(c.model.knn_k_min >= 1 && c.model.knn_k_min <= c.model.knn_k_max, "model.knn_k_min",
        "must satisfy 1 <= knn_k_min <= knn_k_max");
  check(c.model.svm_c > 0.0, "model.svm_c", "must be positive");
  check(c.model.svm_epochs >= 1, "model.svm_epochs", "must be >= 1");
  check(c.model.rf_trees >= 1, "model.rf_trees", "must be >= 1");
  check(c.detect.accuracy_threshold >= 0.0 && c.detect.accuracy_threshold <= 1.0,
        "detect.accuracy_threshold", "must lie in [0, 1]");
  check(c.detect.max_time_s > 0.0, "detect.max_time_s", "must be positive");
  for (double t : c.openset.thresholds) {
    check(t >= 0.0 && t <= 1.0, "openset.thresholds", "values must lie in [0, 1]");
  }
}

Config parse_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& at = e.source().begin;
    throw Error(ErrorCode::ConfigError,
                fmt::format("{}:{}:{}: {}", source, at.line, at.column, e.description()));
  }
  Config c;
  apply(root, c);
  validate_config(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return parse_config(text, path.string());
}

std::vector<double> openset_thresholds(const OpenSetConfig& config) {
  if (!config.thresholds.empty()) return config.thresholds;
  std::vector<double> out;
  for (int i = 0; i <= 20; ++i) out.push_back(i / 20.0);
  return out;
}

}  // namespace freqprint
