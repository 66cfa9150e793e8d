#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iterator>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "freqprint/binary_io.hpp"
#include "freqprint/config.hpp"
#include "freqprint/detect.hpp"
#include "freqprint/error.hpp"
#include "freqprint/ingest.hpp"
#include "freqprint/pipeline.hpp"
#include "freqprint/preprocess.hpp"
#include "output_dir.hpp"

namespace freqprint::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kModelFile = "model.bin";
constexpr std::string_view kPcaFile = "pca.bin";
constexpr std::string_view kMetaFile = "model.json";

Config load(const CommonOptions& common) {
  Config config = common.config_path.empty() ? Config{} : load_config(common.config_path);
  if (common.seed) config.seed = *common.seed;
  validate_config(config);
  return config;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

/// Traces come from a corpus directory when one is given, otherwise from the
/// simulator with the loaded config.
struct Dataset {
  std::optional<CorpusManifest> manifest;
  FrequencyTables tables;
  TraceSource source;
};

Dataset open_dataset(const std::string& corpus, const Config& config) {
  Dataset d;
  if (corpus.empty()) {
    d.tables = config.tables;
    d.source = simulated_source(config);
  } else {
    d.manifest = read_manifest(corpus);
    d.tables = d.manifest->tables;
    d.source = manifest_source(*d.manifest);
  }
  return d;
}

Json layout_json(const WindowLayout& l) {
  return {{"n_blocks", l.n_blocks}, {"n_windows", l.n_windows}, {"window_width", l.window_width}};
}

std::string confusion_csv(const Evaluation& ev, const ClassMap& classes) {
  auto name = [&](int id) {
    return id == kUnknownClass ? std::string("unknown") : classes.label_of(id);
  };
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "true\\predicted");
  for (int id : ev.class_ids) fmt::format_to(out, ",{}", name(id));
  fmt::format_to(out, "\n");
  for (std::size_t r = 0; r < ev.class_ids.size(); ++r) {
    fmt::format_to(out, "{}", name(ev.class_ids[r]));
    for (std::size_t c = 0; c < ev.class_ids.size(); ++c) {
      fmt::format_to(out, ",{}", ev.confusion(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    fmt::format_to(out, "\n");
  }
  return fmt::to_string(buf);
}

std::string predictions_csv(std::span<const std::size_t> rows, std::span<const int> truth,
                            std::span<const int> predicted, const ClassMap& classes) {
  auto name = [&](int id) {
    return id == kUnknownClass ? std::string("unknown") : classes.label_of(id);
  };
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "row,true,predicted\n");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    fmt::format_to(out, "{},{},{}\n", rows[i], name(truth[i]), name(predicted[i]));
  }
  return fmt::to_string(buf);
}

void print_evaluation(const Evaluation& ev, const ClassMap& classes) {
  std::fputs(fmt::format("accuracy {:.4f}\n", ev.accuracy).c_str(), stdout);
  std::fputs(confusion_csv(ev, classes).c_str(), stdout);
}

}  // namespace

int cmd_generate(const GenerateOptions& options) {
  const auto config = load(options.common);
  if (options.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  std::error_code ec;
  if (std::filesystem::exists(options.out, ec) && !std::filesystem::is_empty(options.out, ec)) {
    throw Error(ErrorCode::IoError,
                fmt::format("{} is not empty; refusing to mix corpora", options.out));
  }
  const bool existed = std::filesystem::exists(options.out, ec);
  try {
    const auto manifest = generate_corpus_files(config, options.out);
    fmt::print("generated {} traces across {} applications in {}\n", manifest.entries.size(),
               config.profiles.size(), options.out);
  } catch (...) {
    if (existed) {
      for (const auto& entry : std::filesystem::directory_iterator(options.out, ec)) {
        std::filesystem::remove_all(entry.path(), ec);
      }
    } else {
      std::filesystem::remove_all(options.out, ec);
    }
    throw;
  }
  return 0;
}

int cmd_train(const TrainOptions& options) {
  const auto config = load(options.common);
  const auto pipeline = parse_pipeline(options.data.pipeline);
  const auto kind = parse_model_kind(options.data.model);
  if (options.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  const auto data = open_dataset(options.data.corpus, config);
  const auto features = build_features(pipeline, config, data.tables, data.source);
  const auto ex = run_experiment(features, config, kind);

  OutputDir out(options.out);
  save_model(ex.model, out.track(kModelFile));
  save_pca(ex.pca, out.track(kPcaFile));

  Json meta;
  meta["format"] = "freqprint-model";
  meta["version"] = 1;
  meta["pipeline"] = to_string(pipeline);
  meta["model"] = to_string(kind);
  meta["seed"] = config.seed;
  meta["classes"] = features.classes.labels();
  meta["layout"] = layout_json(features.layout);
  if (kind == ModelKind::Knn) meta["knn_k"] = ex.spec.knn.k;
  out.write(kMetaFile, dump(meta));

  Json metrics;
  metrics["pipeline"] = to_string(pipeline);
  metrics["model"] = to_string(kind);
  metrics["seed"] = config.seed;
  metrics["n_train"] = ex.split.train_indices.size();
  metrics["n_test"] = ex.split.test_indices.size();
  metrics["pca_components"] = ex.pca.total_components();
  if (kind == ModelKind::Knn) metrics["knn_k"] = ex.spec.knn.k;
  metrics["accuracy"] = ex.evaluation.accuracy;
  out.write("metrics.json", dump(metrics));
  out.write("confusion.csv", confusion_csv(ex.evaluation, features.classes));
  out.write("predictions.csv",
            predictions_csv(ex.split.test_indices, ex.split.test.labels, ex.evaluation.predictions,
                            features.classes));
  out.commit();

  fmt::print("{} / {}: {} train, {} test, {} PCA components\n", to_string(pipeline), to_string(kind),
             ex.split.train_indices.size(), ex.split.test_indices.size(), ex.pca.total_components());
  print_evaluation(ex.evaluation, features.classes);
  return 0;
}

int cmd_evaluate(const EvaluateOptions& options) {
  const auto config = load(options.common);
  if (options.artifacts.empty()) throw Error(ErrorCode::InvalidArgument, "--artifacts is required");
  if (options.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  const std::filesystem::path dir(options.artifacts);
  Json meta;
  try {
    meta = Json::parse(read_text_file(dir / kMetaFile));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::FormatError, fmt::format("{}: {}", (dir / kMetaFile).string(), e.what()));
  }
  if (meta.value("format", "") != "freqprint-model" || meta.value("version", 0) != 1) {
    throw Error(ErrorCode::FormatError, fmt::format("{} is not a model description", (dir / kMetaFile).string()));
  }
  const auto pipeline = parse_pipeline(meta.at("pipeline").get<std::string>());
  const ClassMap classes(meta.at("classes").get<std::vector<std::string>>());
  const auto model = load_model(dir / kModelFile);
  const auto pca = load_pca(dir / kPcaFile);

  const auto data = open_dataset(options.corpus, config);
  const auto features = build_features(pipeline, config, data.tables, data.source, &classes);
  const auto projected = apply_pca(pca, features.matrix);
  const auto ev = evaluate(model, projected);

  OutputDir out(options.out);
  Json metrics;
  metrics["pipeline"] = to_string(pipeline);
  metrics["model"] = to_string(model.kind());
  metrics["n_rows"] = projected.labels.size();
  metrics["accuracy"] = ev.accuracy;
  out.write("metrics.json", dump(metrics));
  out.write("confusion.csv", confusion_csv(ev, classes));
  std::vector<std::size_t> rows(projected.labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  out.write("predictions.csv", predictions_csv(rows, projected.labels, ev.predictions, classes));
  out.commit();
  print_evaluation(ev, classes);
  return 0;
}

int cmd_detect_latency(const DetectOptions& options) {
  auto config = load(options.common);
  if (options.threshold) config.detect.accuracy_threshold = *options.threshold;
  const auto pipeline = parse_pipeline(options.data.pipeline);
  const auto kind = parse_model_kind(options.data.model);
  if (options.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  const auto data = open_dataset(options.data.corpus, config);
  const auto features = build_features(pipeline, config, data.tables, data.source);
  const auto split = split_dataset(features.matrix, config.preprocess.split_ratio, config.seed);

  auto spec = model_spec(config, kind);
  if (kind == ModelKind::Knn && spec.knn.k == 0) {
    const auto full = fit_windowed_pca(split.train, features.layout, config.features.pca);
    spec = resolved_model_spec(config, kind, apply_pca(full, split.train));
  }
  DetectionOptions opts;
  opts.window_ms = config.features.window_ms;
  opts.accuracy_threshold = config.detect.accuracy_threshold;
  opts.max_time_s = config.detect.max_time_s;
  opts.pca = config.features.pca;
  const auto report = detection_latency(split.train, split.test, features.layout, spec, opts);
  const auto& names = features.classes.labels();

  OutputDir out(options.out);
  out.write("detection.csv", format_detection_csv(report, names));
  out.write("accuracy_curve.csv", format_accuracy_curve_csv(report, names));
  Json summary;
  summary["pipeline"] = to_string(pipeline);
  summary["model"] = to_string(kind);
  summary["seed"] = config.seed;
  summary["window_ms"] = report.window_ms;
  summary["accuracy_threshold"] = report.accuracy_threshold;
  summary["max_detection_time_s"] = report.max_detection_time_s;
  Json apps = Json::object();
  for (std::size_t a = 0; a < report.class_ids.size(); ++a) {
    apps[names[static_cast<std::size_t>(report.class_ids[a])]] = report.detection_time_s[a];
  }
  summary["detection_time_s"] = apps;
  const auto overall = detection_time_from_curve(report.overall_accuracy, report.window_ms,
                                                 report.accuracy_threshold, report.max_detection_time_s);
  summary["overall_detection_time_s"] = overall;
  summary["final_overall_accuracy"] = report.overall_accuracy.back();
  out.write("summary.json", dump(summary));
  out.commit();

  std::fputs(format_detection_csv(report, names).c_str(), stdout);
  fmt::print("overall accuracy reaches {} at {} s\n", report.accuracy_threshold, overall);
  return 0;
}

int cmd_openset(const OpenSetOptions& options) {
  auto config = load(options.common);
  if (!options.holdout.empty()) config.openset.holdout = options.holdout;
  if (!options.thresholds.empty()) config.openset.thresholds = options.thresholds;
  validate_config(config);
  const auto pipeline = parse_pipeline(options.data.pipeline);
  const auto kind = parse_model_kind(options.data.model);
  if (options.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  if (config.openset.holdout.empty()) {
    throw Error(ErrorCode::InvalidArgument, "open-set evaluation needs at least one held-out application");
  }

  const auto data = open_dataset(options.data.corpus, config);
  const auto features = build_features(pipeline, config, data.tables, data.source);
  std::set<int> held;
  for (const auto& label : config.openset.holdout) held.insert(features.classes.id_of(label));
  if (held.size() >= features.classes.size()) {
    throw Error(ErrorCode::InvalidArgument, "every application is held out; nothing to train on");
  }

  std::vector<std::size_t> known, unknown;
  for (std::size_t i = 0; i < features.matrix.labels.size(); ++i) {
    (held.count(features.matrix.labels[i]) != 0 ? unknown : known).push_back(i);
  }
  const auto split = split_dataset(select_rows(features.matrix, known), config.preprocess.split_ratio,
                                   config.seed);
  const auto pca = fit_windowed_pca(split.train, features.layout, config.features.pca);
  const auto train = apply_pca(pca, split.train);
  const auto spec = resolved_model_spec(config, kind, train);
  const auto model = train_model(spec, train);
  auto unknown_rows = apply_pca(pca, select_rows(features.matrix, unknown));
  std::fill(unknown_rows.labels.begin(), unknown_rows.labels.end(), kUnknownClass);
  const auto thresholds = openset_thresholds(config.openset);
  const auto reports = open_set_eval(model, apply_pca(pca, split.test), unknown_rows, thresholds);

  OutputDir out(options.out);
  out.write("openset.csv", format_openset_csv(reports));
  Json summary;
  summary["pipeline"] = to_string(pipeline);
  summary["model"] = to_string(kind);
  summary["seed"] = config.seed;
  summary["holdout"] = config.openset.holdout;
  summary["n_known_test"] = split.test.labels.size();
  summary["n_unknown_test"] = unknown_rows.labels.size();
  Json rows = Json::array();
  for (const auto& r : reports) {
    rows.push_back({{"threshold", r.decision_threshold},
                    {"known_accuracy", r.known_accuracy},
                    {"unknown_accuracy", r.unknown_accuracy},
                    {"known_retention", r.known_retention},
                    {"precision", r.precision},
                    {"recall", r.recall}});
  }
  summary["sweep"] = rows;
  out.write("summary.json", dump(summary));
  out.commit();
  std::fputs(format_openset_csv(reports).c_str(), stdout);
  return 0;
}

namespace {

Json inspect_corpus(const std::filesystem::path& root) {
  const auto manifest = read_manifest(root);
  Json doc;
  doc["kind"] = "corpus";
  doc["traces"] = manifest.entries.size();
  doc["capture_duration_us"] = manifest.capture_duration_us;
  Json tables = Json::array();
  for (const auto& t : manifest.tables) {
    tables.push_back({{"cluster", t.cluster_id()},
                      {"levels", t.size()},
                      {"min_khz", t.levels().front()},
                      {"max_khz", t.max_level()}});
  }
  doc["tables"] = tables;
  std::map<std::string, std::size_t> counts;
  std::size_t with_em = 0;
  for (const auto& e : manifest.entries) {
    ++counts[e.app_label];
    with_em += e.em_base ? 1 : 0;
  }
  doc["applications"] = counts;
  doc["em_traces"] = with_em;
  return doc;
}

Json inspect_model(const std::filesystem::path& path) {
  const auto model = load_model(path);
  Json doc;
  doc["kind"] = "model";
  doc["model"] = to_string(model.kind());
  doc["n_features"] = model.n_features();
  doc["n_classes"] = model.class_ids().size();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnModel>) {
          doc["k"] = p.k;
          doc["reference_rows"] = p.rows.rows();
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          std::size_t nodes = 0;
          for (const auto& t : p.trees) nodes += t.nodes.size();
          doc["trees"] = p.trees.size();
          doc["nodes"] = nodes;
        }
      },
      model.parameters());
  return doc;
}

Json inspect_pca(const std::filesystem::path& path) {
  const auto pca = load_pca(path);
  Json doc;
  doc["kind"] = "pca";
  doc["layout"] = layout_json(pca.layout);
  doc["fitted_windows"] = pca.windows.size();
  doc["total_components"] = pca.total_components();
  Json ks = Json::array();
  for (const auto& w : pca.windows) ks.push_back(w.k());
  doc["components_per_window"] = ks;
  return doc;
}

Json inspect_dvfs(const std::filesystem::path& path, const Config& config) {
  const auto text = read_text_file(path);
  for (const auto& table : config.tables) {
    try {
      const auto samples = parse_dvfs_log(text, table);
      std::set<FreqKhz> distinct;
      for (const auto& s : samples) distinct.insert(s.freq_khz);
      Json doc;
      doc["kind"] = "dvfs-log";
      doc["cluster"] = table.cluster_id();
      doc["samples"] = samples.size();
      doc["first_start_us"] = samples.front().start_us;
      doc["last_end_us"] = samples.back().end_us;
      doc["distinct_frequencies_khz"] = distinct;
      return doc;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownFrequency) throw;
    }
  }
  throw Error(ErrorCode::UnknownFrequency,
              fmt::format("{} uses frequencies outside every configured table", path.string()));
}

Json inspect_em(const std::filesystem::path& base) {
  const auto em = read_em_trace(base);
  Json doc;
  doc["kind"] = "em-trace";
  doc["label"] = em.label ? Json(*em.label) : Json(nullptr);
  doc["samples"] = em.samples.size();
  doc["sample_rate_hz"] = em.sample_rate_hz;
  doc["duration_s"] = em.duration_s;
  return doc;
}

}  // namespace

int cmd_inspect(const InspectOptions& options) {
  const auto config = load(options.common);
  const std::filesystem::path path(options.path);
  std::error_code ec;
  Json doc;
  if (std::filesystem::is_directory(path, ec)) {
    doc = inspect_corpus(path);
  } else if (path.extension() == ".csv") {
    doc = inspect_dvfs(path, config);
  } else if (path.extension() == ".hdr" || path.extension() == ".bin") {
    auto base = path;
    base.replace_extension();
    const auto tag = path.extension() == ".bin" ? read_text_file(path).substr(0, 5) : std::string();
    if (tag == "FPMDL") {
      doc = inspect_model(path);
    } else if (tag == "FPPCA") {
      doc = inspect_pca(path);
    } else {
      doc = inspect_em(base);
    }
  } else {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("cannot tell what {} is (corpus directory, .csv, .hdr or .bin)", path.string()));
  }
  if (options.out.empty()) {
    std::fputs(dump(doc).c_str(), stdout);
  } else {
    write_text_file(options.out, dump(doc));
  }
  return 0;
}

}  // namespace freqprint::cli
