// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any criterion fails. Pass criterion numbers as arguments to run
// a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "freqprint/binary_io.hpp"
#include "freqprint/config.hpp"
#include "freqprint/detect.hpp"
#include "freqprint/features.hpp"
#include "freqprint/fft.hpp"
#include "freqprint/ingest.hpp"
#include "freqprint/ml.hpp"
#include "freqprint/pipeline.hpp"
#include "freqprint/preprocess.hpp"
#include "freqprint/rng.hpp"

using namespace freqprint;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

Config clean_config() {
  Config c;
  c.corpus.simulation.background_noise = 0.0;
  c.corpus.simulation.duration_jitter = 0.0;
  return c;
}

std::vector<double> row_vector(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return v;
}

// 1. Windowed spectra against the direct DFT, plus Parseval.
Outcome spectral_oracle() {
  Rng rng(101);
  double worst_dft = 0.0;
  double worst_parseval = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    WindowPlan plan;
    plan.samples_per_window = 2 + rng.below(255);
    plan.n_windows = 1;
    UniformSeries s;
    s.dt_us = 500.0;
    s.values.resize(plan.samples_per_window);
    for (auto& v : s.values) v = trial % 2 == 0 ? rng.normal() : static_cast<double>(rng.below(34));
    const auto got = windowed_spectrum(s, plan, Taper::Rectangular);
    const auto n_fft = plan.fft_size();
    const auto want = oracle::dft_magnitude(s.values, n_fft);

    double scale = 0.0;
    double err = 0.0;
    for (std::size_t k = 0; k < want.size(); ++k) {
      scale = std::max(scale, std::abs(want[k]));
      err = std::max(err, std::abs(got[k] - want[k]));
    }
    if (scale > 0.0) worst_dft = std::max(worst_dft, err / scale);

    double energy = 0.0;
    for (double v : s.values) energy += v * v;
    double spectral = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
      const bool edge = k == 0 || k == n_fft / 2;
      spectral += (edge ? 1.0 : 2.0) * got[k] * got[k];
    }
    spectral /= static_cast<double>(n_fft);
    if (energy > 0.0) worst_parseval = std::max(worst_parseval, std::abs(spectral - energy) / energy);
  }
  return {worst_dft <= 1e-9 && worst_parseval <= 1e-6,
          fmt::format("max DFT error {:.3g} (<= 1e-9), max Parseval error {:.3g} (<= 1e-6)", worst_dft,
                      worst_parseval)};
}

// 2. Single-window PCA against a Jacobi eigendecomposition.
Outcome pca_oracle() {
  Rng rng(202);
  double worst_value = 0.0;
  double worst_vector = 0.0;
  bool rank_ok = true;
  bool monotone = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    const std::size_t d = 1 + rng.below(12);
    FeatureMatrix m;
    m.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < m.rows.rows(); ++r)
      for (Eigen::Index c = 0; c < m.rows.cols(); ++c) m.rows(r, c) = rng.normal() * (1.0 + static_cast<double>(c));
    m.labels.assign(n, 0);

    PcaOptions opts;
    opts.budget = 1000;
    opts.per_window_max = d;
    opts.variance_threshold = 2.0;  // keep every non-null direction
    const auto model = fit_windowed_pca(m, {1, 1, d}, opts);
    const auto& win = model.windows[0];

    auto ref = oracle::jacobi_eigen(oracle::covariance(fixtures::to_rows(m.rows)));
    oracle::fix_signs(ref.vectors);
    std::size_t rank = 0;
    while (rank < d && ref.values[rank] > 1e-9 * ref.values[0]) ++rank;
    if (win.k() != rank) {
      rank_ok = false;
      continue;
    }
    for (std::size_t i = 0; i < rank; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      worst_value = std::max(worst_value, std::abs(win.eigenvalues(ii) - ref.values[i]) / ref.values[0]);
      for (std::size_t j = 0; j < d; ++j) {
        worst_vector = std::max(worst_vector,
                                std::abs(win.components(ii, static_cast<Eigen::Index>(j)) - ref.vectors[i][j]));
      }
    }

    const Eigen::MatrixXd centred = m.rows.rowwise() - win.mean.transpose();
    double previous = centred.squaredNorm();
    for (std::size_t k = 1; k <= rank; ++k) {
      const Eigen::MatrixXd v = win.components.topRows(static_cast<Eigen::Index>(k));
      const double err = (centred - centred * v.transpose() * v).squaredNorm();
      if (err > previous + 1e-12 * centred.squaredNorm()) monotone = false;
      previous = err;
    }
  }
  return {rank_ok && monotone && worst_value <= 1e-6 && worst_vector <= 1e-6,
          fmt::format("eigenvalue error {:.3g}, component error {:.3g} (<= 1e-6), ranks {}, "
                      "reconstruction {}",
                      worst_value, worst_vector, rank_ok ? "agree" : "DISAGREE",
                      monotone ? "non-increasing" : "INCREASES")};
}

// 3. KNN against all-pairs search, SVM on separable blobs, one pure tree.
Outcome classifier_sanity() {
  std::size_t knn_mismatches = 0;
  for (std::size_t k : {1, 3, 5, 20}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto train = fixtures::blobs(4, 50, 3, 1.5, 2.0, 300 + seed * 10 + k);
      const auto queries = fixtures::blobs(4, 25, 3, 2.0, 2.0, 400 + seed * 10 + k).rows;
      const auto model = train_knn(train, k);
      const auto proba = predict_proba(model, queries);
      const auto rows = fixtures::to_rows(train.rows);
      for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        const auto want = oracle::knn_votes(rows, train.labels, model.class_ids(), row_vector(queries, q), k);
        for (std::size_t c = 0; c < want.size(); ++c) {
          if (proba(q, static_cast<Eigen::Index>(c)) != want[c]) ++knn_mismatches;
        }
      }
    }
  }

  double svm_worst = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto blobs = fixtures::blobs(2, 100, 5, 0.5, 4.0, 500 + seed);
    SvmParams p;
    p.seed = seed;
    svm_worst = std::min(svm_worst, evaluate(train_svm(blobs, p), blobs).accuracy);
  }

  double tree_worst = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto blobs = fixtures::blobs(6, 40, 4, 2.0, 1.0, 600 + seed);
    ForestParams p;
    p.n_estimators = 1;
    p.bootstrap = false;
    p.seed = seed;
    tree_worst = std::min(tree_worst, evaluate(train_rf(blobs, p), blobs).accuracy);
  }
  return {knn_mismatches == 0 && svm_worst == 1.0 && tree_worst == 1.0,
          fmt::format("KNN mismatches {} (k in 1,3,5,20), SVM separable accuracy {:.3f}, "
                      "single tree training accuracy {:.3f}",
                      knn_mismatches, svm_worst, tree_worst)};
}

// 4. Frequency features beat time features for SVM and RF on the default
// moderate-noise corpus.
Outcome pipeline_ordering() {
  int ordered = 0;
  double rf_freq_min = 1.0;
  std::string table;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Config config;
    config.seed = seed;
    double acc[2][2] = {};  // [pipeline][svm, rf]
    const Pipeline pipelines[2] = {Pipeline::DvfsTime, Pipeline::DvfsFreq};
    for (int p = 0; p < 2; ++p) {
      const auto features = build_features(pipelines[p], config, config.tables, simulated_source(config));
      const auto split = split_dataset(features.matrix, config.preprocess.split_ratio, config.seed);
      const auto pca = fit_windowed_pca(split.train, features.layout, config.features.pca);
      const auto train = apply_pca(pca, split.train);
      const auto test = apply_pca(pca, split.test);
      acc[p][0] = evaluate(train_model(model_spec(config, ModelKind::LinearSvm), train), test).accuracy;
      acc[p][1] = evaluate(train_model(model_spec(config, ModelKind::RandomForest), train), test).accuracy;
    }
    const bool ok = acc[1][0] > acc[0][0] && acc[1][1] > acc[0][1];
    ordered += ok ? 1 : 0;
    rf_freq_min = std::min(rf_freq_min, acc[1][1]);
    table += fmt::format("\n    seed {:2}: svm time {:.3f} freq {:.3f} | rf time {:.3f} freq {:.3f} {}", seed,
                         acc[0][0], acc[1][0], acc[0][1], acc[1][1], ok ? "" : "(ordering violated)");
  }
  return {ordered >= 8 && rf_freq_min >= 0.80,
          fmt::format("ordering held on {}/10 seeds (>= 8), min RF dvfs-freq accuracy {:.3f} (>= 0.80){}",
                      ordered, rf_freq_min, table)};
}

// 5. Default corpus split sizes, through the generate command.
Outcome corpus_shape() {
  fixtures::TempDir dir("accept-corpus");
  const auto root = dir.path() / "corpus";
  const auto r = fixtures::run_program(FREQPRINT_CLI_PATH, "generate --out " + root.string());
  if (r.exit_code != 0) return {false, "generate failed: " + r.output};
  const auto manifest = read_manifest(root);
  const ClassMap classes(manifest_labels(manifest));
  FeatureMatrix m;
  m.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(manifest.entries.size()), 1);
  for (const auto& e : manifest.entries) m.labels.push_back(classes.id_of(e.app_label));
  const Config config;
  const auto split = split_dataset(m, config.preprocess.split_ratio, config.seed);
  const bool ok = manifest.entries.size() == 880 && classes.size() == 22 && split.train.n_rows() == 660 &&
                  split.test.n_rows() == 220;
  return {ok, fmt::format("{} traces, {} applications, {} train / {} test (want 660 / 220)",
                          manifest.entries.size(), classes.size(), split.train.n_rows(), split.test.n_rows())};
}

// 6. Detection latency on the clean corpus.
Outcome detection_latency_check() {
  const auto config = clean_config();
  const auto features = build_features(Pipeline::DvfsFreq, config, config.tables, simulated_source(config));
  const auto split = split_dataset(features.matrix, config.preprocess.split_ratio, config.seed);
  DetectionOptions opts;
  opts.window_ms = config.features.window_ms;
  opts.accuracy_threshold = config.detect.accuracy_threshold;
  opts.max_time_s = config.detect.max_time_s;
  opts.pca = config.features.pca;
  const auto report = detection_latency(split.train, split.test, features.layout,
                                        model_spec(config, ModelKind::RandomForest), opts);
  const double slowest = *std::max_element(report.detection_time_s.begin(), report.detection_time_s.end());
  const double fastest = *std::min_element(report.detection_time_s.begin(), report.detection_time_s.end());
  const double overall = detection_time_from_curve(report.overall_accuracy, report.window_ms, 0.8,
                                                   report.max_detection_time_s);
  const bool curve_complete = report.overall_accuracy.size() == config.features.n_windows;
  const bool ok = slowest < 10.0 && fastest <= 3 * report.window_ms / 1000.0 + 1e-12 && overall < 10.0 &&
                  curve_complete;
  return {ok, fmt::format("slowest app {:.1f} s (< 10), fastest {:.1f} s (<= 0.3), overall curve reaches 0.80 at "
                          "{:.1f} s (< 10), curve has {} points, final overall accuracy {:.3f}",
                          slowest, fastest, overall, report.overall_accuracy.size(),
                          report.overall_accuracy.back())};
}

// 7. Open-set reachability and monotonicity on the clean corpus.
Outcome open_set_check() {
  const auto config = clean_config();
  const auto features = build_features(Pipeline::DvfsFreq, config, config.tables, simulated_source(config));
  std::set<int> held;
  for (const auto& label : config.openset.holdout) held.insert(features.classes.id_of(label));
  std::vector<std::size_t> known, unknown;
  for (std::size_t i = 0; i < features.matrix.labels.size(); ++i) {
    (held.count(features.matrix.labels[i]) != 0 ? unknown : known).push_back(i);
  }
  const auto split = split_dataset(select_rows(features.matrix, known), config.preprocess.split_ratio, config.seed);
  const auto pca = fit_windowed_pca(split.train, features.layout, config.features.pca);
  const auto model = train_model(model_spec(config, ModelKind::RandomForest), apply_pca(pca, split.train));
  auto unknown_rows = apply_pca(pca, select_rows(features.matrix, unknown));
  std::fill(unknown_rows.labels.begin(), unknown_rows.labels.end(), kUnknownClass);
  const auto thresholds = openset_thresholds(config.openset);
  const auto reports = open_set_eval(model, apply_pca(pca, split.test), unknown_rows, thresholds);

  bool monotone = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].unknown_accuracy < reports[i - 1].unknown_accuracy) monotone = false;
    if (reports[i].known_retention > reports[i - 1].known_retention) monotone = false;
  }
  const OpenSetReport* best = nullptr;
  for (const auto& r : reports) {
    if (r.unknown_accuracy >= 0.85 && r.known_accuracy >= 0.60) {
      best = &r;
      break;
    }
  }
  std::string detail = fmt::format("{} held out, {} thresholds, monotonicity {}", held.size(), reports.size(),
                                    monotone ? "holds" : "VIOLATED");
  if (best != nullptr) {
    detail += fmt::format("; threshold {:.2f} gives unknown {:.3f} (>= 0.85) with known {:.3f} (>= 0.60)",
                          best->decision_threshold, best->unknown_accuracy, best->known_accuracy);
  } else {
    double top_known = 0.0;
    for (const auto& r : reports) {
      if (r.unknown_accuracy >= 0.85) top_known = std::max(top_known, r.known_accuracy);
    }
    detail += fmt::format("; no threshold reaches the target (best known at unknown >= 0.85: {:.3f})", top_known);
  }
  return {monotone && best != nullptr, detail};
}

// 8. Every command twice with the same config and seed.
Outcome cli_determinism() {
  fixtures::TempDir dir("accept-determinism");
  const auto config = dir.path() / "small.toml";
  write_text_file(config, fixtures::small_config_toml(7, "spinner"));
  const std::string cfg = " --config " + config.string();
  const auto path = [&](const std::string& run, const std::string& name) {
    return (dir.path() / run / name).string();
  };

  std::vector<std::pair<std::string, std::function<std::string(const std::string&)>>> commands = {
      {"generate", [&](const std::string& run) { return "generate --out " + path(run, "corpus"); }},
      {"train dvfs-time svm",
       [&](const std::string& run) {
         return "train --corpus " + path(run, "corpus") + " --pipeline dvfs-time --model svm --out " + path(run, "t1");
       }},
      {"train dvfs-freq knn",
       [&](const std::string& run) {
         return "train --corpus " + path(run, "corpus") + " --pipeline dvfs-freq --model knn --out " + path(run, "t2");
       }},
      {"train dvfs-freq rf",
       [&](const std::string& run) {
         return "train --corpus " + path(run, "corpus") + " --pipeline dvfs-freq --model rf --out " + path(run, "t3");
       }},
      {"train em-freq rf",
       [&](const std::string& run) { return "train --pipeline em-freq --model rf --out " + path(run, "t4"); }},
      {"evaluate",
       [&](const std::string& run) {
         return "evaluate --corpus " + path(run, "corpus") + " --artifacts " + path(run, "t3") + " --out " +
                path(run, "ev");
       }},
      {"detect-latency",
       [&](const std::string& run) { return "detect-latency --corpus " + path(run, "corpus") + " --out " + path(run, "dl"); }},
      {"openset",
       [&](const std::string& run) { return "openset --corpus " + path(run, "corpus") + " --out " + path(run, "os"); }},
      {"inspect", [&](const std::string& run) { return "inspect " + path(run, "corpus") + " --out " + path(run, "in.json"); }},
  };

  std::vector<std::string> differing;
  for (const auto& run : {"a", "b"}) {
    for (const auto& [name, args] : commands) {
      const auto r = fixtures::run_program(FREQPRINT_CLI_PATH, args(run) + cfg);
      if (r.exit_code != 0) return {false, fmt::format("{} failed in run {}: {}", name, run, r.output)};
    }
  }
  const auto a = fixtures::read_tree(dir.path() / "a");
  const auto b = fixtures::read_tree(dir.path() / "b");
  std::set<std::string> names;
  for (const auto& [k, v] : a) names.insert(k);
  for (const auto& [k, v] : b) names.insert(k);
  for (const auto& n : names) {
    const auto ia = a.find(n);
    const auto ib = b.find(n);
    if (ia == a.end() || ib == b.end() || ia->second != ib->second) differing.push_back(n);
  }
  std::string detail = fmt::format("{} commands, {} artifacts compared, {} differ", commands.size(), names.size(),
                                   differing.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(differing.size(), 5); ++i) detail += " " + differing[i];
  return {differing.empty() && !names.empty(), detail};
}

// 9. DVFS log and EM trace write/read round-trips.
Outcome format_round_trips() {
  fixtures::TempDir dir("accept-roundtrip");
  const auto tables = default_tables();
  Rng rng(909);
  std::size_t dvfs_bad = 0;
  std::size_t em_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& table = tables[rng.below(tables.size())];
    std::vector<DvfsSample> samples(1 + rng.below(300));
    Micros t = static_cast<Micros>(rng.below(1u << 20));
    for (auto& s : samples) {
      s.start_us = t;
      s.end_us = t + static_cast<Micros>(rng.below(1000));
      s.freq_khz = table.level(rng.below(table.size()));
      t += static_cast<Micros>(rng.below(5000));
    }
    const auto log = dir.path() / fmt::format("t{}.csv", i);
    write_dvfs_log(samples, log);
    if (read_dvfs_log(log, table) != samples) ++dvfs_bad;

    EmTrace em;
    if (rng.below(2) == 0) em.label = fmt::format("app_{}", rng.below(1000));
    em.sample_rate_hz = 1000.0 + static_cast<double>(rng.below(100000));
    em.samples.resize(1 + rng.below(4000));
    for (auto& v : em.samples) {
      std::uint32_t bits = 0;
      do {
        bits = static_cast<std::uint32_t>(rng.next_u64());
        std::memcpy(&v, &bits, sizeof v);
      } while (!std::isfinite(v));
    }
    em.duration_s = static_cast<double>(em.samples.size()) / em.sample_rate_hz;
    const auto base = dir.path() / fmt::format("e{}", i);
    write_em_trace(em, base);
    const auto back = read_em_trace(base);
    const bool same = back.label == em.label && back.sample_rate_hz == em.sample_rate_hz &&
                      back.duration_s == em.duration_s && back.samples.size() == em.samples.size() &&
                      std::memcmp(back.samples.data(), em.samples.data(), em.samples.size() * sizeof(float)) == 0;
    if (!same) ++em_bad;
  }
  return {dvfs_bad == 0 && em_bad == 0,
          fmt::format("1000 DVFS logs ({} mismatched), 1000 EM traces ({} mismatched, bitwise)", dvfs_bad, em_bad)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "spectral oracle", 30.0, spectral_oracle},
      {2, "PCA oracle", 30.0, pca_oracle},
      {3, "classifier sanity", 60.0, classifier_sanity},
      {4, "pipeline ordering", 600.0, pipeline_ordering},
      {5, "corpus shape", 0.0, corpus_shape},
      {6, "detection latency", 600.0, detection_latency_check},
      {7, "open-set reachability", 600.0, open_set_check},
      {8, "CLI determinism", 0.0, cli_determinism},
      {9, "format round-trips", 60.0, format_round_trips},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && selected.count(c.id) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("threw: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s == 0.0 || seconds < c.budget_s;
    const bool pass = outcome.pass && in_time;
    failures += pass ? 0 : 1;
    const auto budget = c.budget_s == 0.0 ? std::string() : fmt::format(" / {:.0f} s", c.budget_s);
    std::printf("%s", fmt::format("[{}] {} {}: {} ({:.1f} s{}{})\n", pass ? "PASS" : "FAIL", c.id, c.name,
                                  outcome.detail, seconds, budget, in_time ? "" : ", over budget")
                          .c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
