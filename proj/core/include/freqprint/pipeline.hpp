#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "freqprint/config.hpp"
#include "freqprint/core_model.hpp"
#include "freqprint/features.hpp"
#include "freqprint/ingest.hpp"
#include "freqprint/ml.hpp"

namespace freqprint {

enum class Pipeline { DvfsTime, DvfsFreq, EmFreq };

std::string_view to_string(Pipeline pipeline) noexcept;
Pipeline parse_pipeline(std::string_view name);  // dvfs-time | dvfs-freq | em-freq

/// Windowed feature rows for a set of traces. Every pipeline exposes a
/// window layout: the time pipeline's windows are raw sample ranges, the
/// spectral pipelines' windows are per-window spectra.
struct FeatureSet {
  Pipeline pipeline = Pipeline::DvfsFreq;
  FeatureMatrix matrix;
  WindowLayout layout;
  ClassMap classes;
};

WindowPlan dvfs_window_plan(const Config& config);
WindowPlan em_window_plan(const Config& config);
WindowLayout pipeline_layout(Pipeline pipeline, const Config& config, std::size_t n_clusters);

/// One feature row. The DVFS time row is the first covered_samples() of every
/// cluster's interpolated index series, clusters appended; with the default
/// plan this is the whole appended series.
std::vector<double> dvfs_time_row(const DvfsTrace& trace, const FrequencyTables& tables,
                                  const Config& config);
std::vector<double> dvfs_freq_row(const DvfsTrace& trace, const FrequencyTables& tables,
                                  const Config& config);
std::vector<double> em_freq_row(const EmTrace& trace, const Config& config);

/// Source of one labelled signature. Called concurrently with distinct
/// indexes; must be deterministic per index.
struct TraceSource {
  std::size_t count = 0;
  std::function<std::string(std::size_t)> label;
  std::function<DvfsTrace(std::size_t)> dvfs;
  std::function<EmTrace(std::size_t)> em;
};

/// Featurizes every trace of the source; rows keep source order. Class ids
/// follow `classes` when given, otherwise the sorted distinct labels.
FeatureSet build_features(Pipeline pipeline, const Config& config, const FrequencyTables& tables,
                          const TraceSource& source, const ClassMap* classes = nullptr);

TraceSource manifest_source(const CorpusManifest& manifest);
/// Simulates the configured corpus in memory, trace by trace, with the seeds
/// the generate command uses for the same config.
TraceSource simulated_source(const Config& config);

/// Writes the configured corpus (DVFS logs, optional EM traces, manifest).
CorpusManifest generate_corpus_files(const Config& config, const std::filesystem::path& root);

ModelSpec model_spec(const Config& config, ModelKind kind);
/// model_spec, with k chosen on a fold of `train` when KNN is configured with
/// knn_k = 0.
ModelSpec resolved_model_spec(const Config& config, ModelKind kind, const FeatureMatrix& train);

struct Experiment {
  DatasetSplit split;
  PcaModel pca;
  ModelSpec spec;  // with the selected k for KNN
  TrainedModel model;
  Evaluation evaluation;
};

/// Stratified split, windowed PCA fitted on the training rows, training and
/// test evaluation. KNN with knn_k = 0 sweeps k on a fold of the training rows.
Experiment run_experiment(const FeatureSet& features, const Config& config, ModelKind kind);

}  // namespace freqprint
