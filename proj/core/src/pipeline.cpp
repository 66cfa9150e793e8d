#include "freqprint/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/governor.hpp"
#include "freqprint/parallel.hpp"
#include "freqprint/preprocess.hpp"
#include "freqprint/rng.hpp"

namespace freqprint {

std::string_view to_string(Pipeline pipeline) noexcept {
  switch (pipeline) {
    case Pipeline::DvfsTime: return "dvfs-time";
    case Pipeline::DvfsFreq: return "dvfs-freq";
    case Pipeline::EmFreq: return "em-freq";
  }
  return "?";
}

Pipeline parse_pipeline(std::string_view name) {
  if (name == "dvfs-time") return Pipeline::DvfsTime;
  if (name == "dvfs-freq") return Pipeline::DvfsFreq;
  if (name == "em-freq") return Pipeline::EmFreq;
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown pipeline '{}' (dvfs-time|dvfs-freq|em-freq)", name));
}

WindowPlan dvfs_window_plan(const Config& config) {
  return make_window_plan(config.features.window_ms, config.features.n_windows,
                          config.preprocess.dt_us);
}

WindowPlan em_window_plan(const Config& config) {
  return make_window_plan(config.features.window_ms, config.features.n_windows,
                          1e6 / config.em.sample_rate_hz);
}

WindowLayout pipeline_layout(Pipeline pipeline, const Config& config, std::size_t n_clusters) {
  switch (pipeline) {
    case Pipeline::DvfsTime: {
      const auto plan = dvfs_window_plan(config);
      return {n_clusters, plan.n_windows, plan.samples_per_window};
    }
    case Pipeline::DvfsFreq: {
      const auto plan = dvfs_window_plan(config);
      return {n_clusters, plan.n_windows, plan.spectrum_bins()};
    }
    case Pipeline::EmFreq: {
      const auto plan = em_window_plan(config);
      return {1, plan.n_windows, plan.spectrum_bins()};
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown pipeline");
}

namespace {

std::vector<UniformSeries> uniform_clusters(const DvfsTrace& trace, const FrequencyTables& tables,
                                            const Config& config) {
  return interpolate_trace(trace, tables, config.preprocess.dt_us,
                           config.preprocess.duration_s * 1e6);
}

}  // namespace

std::vector<double> dvfs_time_row(const DvfsTrace& trace, const FrequencyTables& tables,
                                  const Config& config) {
  const auto plan = dvfs_window_plan(config);
  auto series = uniform_clusters(trace, tables, config);
  for (auto& s : series) {
    if (s.values.size() < plan.covered_samples()) {
      throw Error(ErrorCode::TooShort,
                  fmt::format("series has {} samples, windows need {}", s.values.size(),
                              plan.covered_samples()));
    }
    s.values.resize(plan.covered_samples());
  }
  return append_clusters(series);
}

std::vector<double> dvfs_freq_row(const DvfsTrace& trace, const FrequencyTables& tables,
                                  const Config& config) {
  const auto plan = dvfs_window_plan(config);
  std::vector<double> row;
  for (const auto& s : uniform_clusters(trace, tables, config)) {
    const auto spectrum = windowed_spectrum(s, plan, config.features.taper);
    row.insert(row.end(), spectrum.begin(), spectrum.end());
  }
  return row;
}

std::vector<double> em_freq_row(const EmTrace& trace, const Config& config) {
  validate_em(trace);
  const auto plan = em_window_plan(config);
  const auto target =
      static_cast<std::size_t>(std::llround(config.preprocess.duration_s * trace.sample_rate_hz));
  return windowed_spectrum(resample_em(trace, target), plan, config.features.taper);
}

FeatureSet build_features(Pipeline pipeline, const Config& config, const FrequencyTables& tables,
                          const TraceSource& source, const ClassMap* classes) {
  if (source.count == 0) throw Error(ErrorCode::EmptyInput, "no traces to featurize");
  if (pipeline == Pipeline::EmFreq ? !source.em : !source.dvfs) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("the trace source has no data for pipeline {}", to_string(pipeline)));
  }

  std::vector<std::string> labels(source.count);
  for (std::size_t i = 0; i < source.count; ++i) labels[i] = source.label(i);

  FeatureSet out;
  out.pipeline = pipeline;
  if (classes != nullptr) {
    out.classes = *classes;
  } else {
    const std::set<std::string> distinct(labels.begin(), labels.end());
    out.classes = ClassMap(std::vector<std::string>(distinct.begin(), distinct.end()));
  }
  out.layout = pipeline_layout(pipeline, config, tables.size());
  out.matrix.kind = pipeline == Pipeline::DvfsTime ? FeatureKind::TimeDomain : FeatureKind::FreqDomain;
  out.matrix.labels.resize(source.count);
  for (std::size_t i = 0; i < source.count; ++i) out.matrix.labels[i] = out.classes.id_of(labels[i]);

  const auto width = static_cast<Eigen::Index>(out.layout.total_width());
  out.matrix.rows.resize(static_cast<Eigen::Index>(source.count), width);
  parallel_for(source.count, [&](std::size_t i) {
    std::vector<double> row;
    switch (pipeline) {
      case Pipeline::DvfsTime: row = dvfs_time_row(source.dvfs(i), tables, config); break;
      case Pipeline::DvfsFreq: row = dvfs_freq_row(source.dvfs(i), tables, config); break;
      case Pipeline::EmFreq: row = em_freq_row(source.em(i), config); break;
    }
    if (static_cast<Eigen::Index>(row.size()) != width) {
      throw Error(ErrorCode::LengthMismatch,
                  fmt::format("trace {} produced {} features, layout expects {}", i, row.size(), width));
    }
    out.matrix.rows.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(row.data(), width);
  });
  return out;
}

TraceSource manifest_source(const CorpusManifest& manifest) {
  TraceSource src;
  src.count = manifest.entries.size();
  const auto* m = &manifest;
  src.label = [m](std::size_t i) { return m->entries[i].app_label; };
  src.dvfs = [m](std::size_t i) { return load_dvfs_trace(*m, m->entries[i]); };
  src.em = [m](std::size_t i) {
    const auto& e = m->entries[i];
    if (!e.em_base) {
      throw Error(ErrorCode::IoError,
                  fmt::format("corpus entry {}/{} has no EM trace; regenerate with [em] enabled = true",
                              e.app_label, e.trace_id));
    }
    return load_em_trace(*m, e);
  };
  return src;
}

namespace {

DvfsTrace simulate_entry(const Config& config, std::size_t index) {
  const auto n = config.corpus.traces_per_app;
  const auto p = index / n;
  return simulate_governor(config.profiles[p], config.governor, config.tables,
                           config.corpus.duration_s, corpus_trace_seed(config.seed, p, index % n),
                           config.corpus.simulation);
}

EmTrace synthesize_entry(const Config& config, const DvfsTrace& trace, std::size_t index) {
  const auto n = config.corpus.traces_per_app;
  return synthesize_em(trace, config.tables, config.em.sample_rate_hz, config.em.noise_std,
                       corpus_trace_seed(config.seed, index / n, index % n), config.em.synthesis);
}

}  // namespace

TraceSource simulated_source(const Config& config) {
  TraceSource src;
  src.count = config.profiles.size() * config.corpus.traces_per_app;
  src.label = [&config](std::size_t i) {
    return config.profiles[i / config.corpus.traces_per_app].app_label;
  };
  src.dvfs = [&config](std::size_t i) { return simulate_entry(config, i); };
  src.em = [&config](std::size_t i) { return synthesize_entry(config, simulate_entry(config, i), i); };
  return src;
}

CorpusManifest generate_corpus_files(const Config& config, const std::filesystem::path& root) {
  CorpusManifest manifest;
  manifest.root = root;
  manifest.tables = config.tables;
  manifest.capture_duration_us = static_cast<Micros>(std::llround(config.corpus.duration_s * 1e6));
  const auto n = config.corpus.traces_per_app;
  for (const auto& p : config.profiles) {
    for (std::size_t j = 0; j < n; ++j) {
      manifest.entries.push_back(layout_entry(p.app_label, j, config.tables.size(), config.em.enabled));
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create {}: {}", root.string(), ec.message()));
  for (const auto& p : config.profiles) {
    std::filesystem::create_directories(root / p.app_label, ec);
    if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create {}: {}", (root / p.app_label).string(), ec.message()));
  }

  parallel_for(manifest.entries.size(), [&](std::size_t i) {
    const auto trace = simulate_entry(config, i);
    if (config.em.enabled) {
      const auto em = synthesize_entry(config, trace, i);
      store_trace(manifest, manifest.entries[i], trace, &em);
    } else {
      store_trace(manifest, manifest.entries[i], trace);
    }
  });
  write_manifest(manifest);
  return manifest;
}

ModelSpec model_spec(const Config& config, ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  spec.knn.k = config.model.knn_k;
  spec.svm.c = config.model.svm_c;
  spec.svm.epochs = config.model.svm_epochs;
  spec.svm.seed = mix_seed(config.seed, 0x53564d);
  spec.forest.n_estimators = config.model.rf_trees;
  spec.forest.bootstrap = config.model.rf_bootstrap;
  spec.forest.max_features = config.model.rf_max_features;
  spec.forest.seed = mix_seed(config.seed, 0x524600);
  return spec;
}

ModelSpec resolved_model_spec(const Config& config, ModelKind kind, const FeatureMatrix& train) {
  auto spec = model_spec(config, kind);
  if (kind == ModelKind::Knn && spec.knn.k == 0) {
    spec.knn.k = select_knn_k(train, config.model.knn_k_min, config.model.knn_k_max,
                              mix_seed(config.seed, 0x4b4e4e));
  }
  return spec;
}

Experiment run_experiment(const FeatureSet& features, const Config& config, ModelKind kind) {
  auto split = split_dataset(features.matrix, config.preprocess.split_ratio, config.seed);
  auto pca = fit_windowed_pca(split.train, features.layout, config.features.pca);
  const auto train = apply_pca(pca, split.train);
  const auto test = apply_pca(pca, split.test);

  const auto spec = resolved_model_spec(config, kind, train);
  auto model = train_model(spec, train);
  auto evaluation = evaluate(model, test);
  return Experiment{std::move(split), std::move(pca), spec, std::move(model), std::move(evaluation)};
}

}  // namespace freqprint
