#include "freqprint/detect.hpp"

#include <algorithm>
#include <iterator>
#include <map>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/parallel.hpp"

namespace freqprint {

double detection_time_from_curve(std::span<const double> accuracy_by_prefix, double window_ms,
                                 double threshold, double max_time_s) {
  for (std::size_t i = 0; i < accuracy_by_prefix.size(); ++i) {
    if (accuracy_by_prefix[i] >= threshold) {
      return std::min(max_time_s, static_cast<double>(i + 1) * window_ms / 1000.0);
    }
  }
  return max_time_s;
}

DetectionReport detection_latency(const FeatureMatrix& train, const FeatureMatrix& test,
                                  const WindowLayout& layout, const ModelSpec& spec,
                                  const DetectionOptions& options) {
  if (layout.n_windows < 1) throw Error(ErrorCode::InvalidArgument, "need at least one window");
  if (!(options.accuracy_threshold >= 0.0 && options.accuracy_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "accuracy threshold must lie in [0, 1]");
  }
  if (!(options.window_ms > 0.0) || !(options.max_time_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "window and max time must be positive");
  }
  validate_matrix(test);

  DetectionReport report;
  report.window_ms = options.window_ms;
  report.max_detection_time_s = options.max_time_s;
  report.accuracy_threshold = options.accuracy_threshold;
  std::map<int, std::vector<std::size_t>> rows_by_class;
  for (std::size_t i = 0; i < test.labels.size(); ++i) rows_by_class[test.labels[i]].push_back(i);
  for (const auto& entry : rows_by_class) report.class_ids.push_back(entry.first);

  const std::size_t n_windows = layout.n_windows;
  const auto n_apps = static_cast<Eigen::Index>(report.class_ids.size());
  report.per_app_accuracy = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_windows), n_apps);
  report.overall_accuracy.assign(n_windows, 0.0);

  const WindowedPcaFitter fitter(train, layout, options.pca.per_window_max);
  parallel_for(n_windows, [&](std::size_t w) {
    const auto pca = fitter.model(w + 1, options.pca);
    const auto model = train_model(spec, apply_pca(pca, train));
    const auto predicted = predict(model, apply_pca(pca, test).rows);
    std::size_t correct_all = 0;
    Eigen::Index app = 0;
    for (const auto& [cls, rows] : rows_by_class) {
      std::size_t correct = 0;
      for (auto r : rows) correct += predicted[r] == cls ? 1 : 0;
      correct_all += correct;
      report.per_app_accuracy(static_cast<Eigen::Index>(w), app++) =
          static_cast<double>(correct) / static_cast<double>(rows.size());
    }
    report.overall_accuracy[w] =
        test.labels.empty() ? 0.0
                            : static_cast<double>(correct_all) / static_cast<double>(test.labels.size());
  });

  for (Eigen::Index a = 0; a < n_apps; ++a) {
    const Eigen::VectorXd curve = report.per_app_accuracy.col(a);
    report.detection_time_s.push_back(detection_time_from_curve(
        std::span<const double>(curve.data(), static_cast<std::size_t>(curve.size())),
        options.window_ms, options.accuracy_threshold, options.max_time_s));
  }
  return report;
}

std::vector<int> reject_below(const TrainedModel& model, const Eigen::MatrixXd& proba,
                              double threshold) {
  auto labels = argmax_classes(model, proba);
  for (Eigen::Index r = 0; r < proba.rows(); ++r) {
    if (proba.row(r).maxCoeff() < threshold) labels[static_cast<std::size_t>(r)] = kUnknownClass;
  }
  return labels;
}

std::vector<int> classify_with_rejection(const TrainedModel& model, const Eigen::MatrixXd& rows,
                                         double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "decision threshold must lie in [0, 1]");
  }
  return reject_below(model, predict_proba(model, rows), threshold);
}

std::vector<OpenSetReport> open_set_eval(const TrainedModel& model, const FeatureMatrix& known_test,
                                         const FeatureMatrix& unknown_test,
                                         std::span<const double> thresholds) {
  for (int l : unknown_test.labels) {
    if (l != kUnknownClass) {
      throw Error(ErrorCode::InvalidArgument, "unknown test rows must carry the Unknown label");
    }
  }
  const Eigen::MatrixXd known_proba = predict_proba(model, known_test.rows);
  const Eigen::MatrixXd unknown_proba = predict_proba(model, unknown_test.rows);
  const double n_known = static_cast<double>(known_test.labels.size());
  const double n_unknown = static_cast<double>(unknown_test.labels.size());

  std::vector<OpenSetReport> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("threshold {} outside [0, 1]", t));
    }
    const auto known_pred = reject_below(model, known_proba, t);
    const auto unknown_pred = reject_below(model, unknown_proba, t);
    double correct = 0, accepted_known = 0, rejected_unknown = 0;
    for (std::size_t i = 0; i < known_pred.size(); ++i) {
      if (known_pred[i] != kUnknownClass) {
        accepted_known += 1;
        if (known_pred[i] == known_test.labels[i]) correct += 1;
      }
    }
    for (int p : unknown_pred) rejected_unknown += p == kUnknownClass ? 1 : 0;
    const double accepted_unknown = n_unknown - rejected_unknown;

    OpenSetReport r;
    r.decision_threshold = t;
    r.known_accuracy = n_known > 0 ? correct / n_known : 0.0;
    r.known_retention = n_known > 0 ? accepted_known / n_known : 0.0;
    r.unknown_accuracy = n_unknown > 0 ? rejected_unknown / n_unknown : 0.0;
    const double tp = accepted_known;
    const double fp = accepted_unknown;
    const double fn = n_known - accepted_known;
    r.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    out.push_back(r);
  }
  return out;
}

namespace {

std::string name_of(std::span<const std::string> names, int id) {
  if (id >= 0 && static_cast<std::size_t>(id) < names.size()) return names[static_cast<std::size_t>(id)];
  return fmt::format("class{}", id);
}

}  // namespace

std::string format_detection_csv(const DetectionReport& report, std::span<const std::string> names) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "app,detection_time_s,detected\n");
  for (std::size_t a = 0; a < report.class_ids.size(); ++a) {
    const double t = report.detection_time_s[a];
    const auto col = report.per_app_accuracy.col(static_cast<Eigen::Index>(a));
    const bool detected = (col.array() >= report.accuracy_threshold).any();
    fmt::format_to(out, "{},{},{}\n", name_of(names, report.class_ids[a]), t, detected ? 1 : 0);
  }
  return fmt::to_string(buf);
}

std::string format_accuracy_curve_csv(const DetectionReport& report,
                                      std::span<const std::string> names) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "window,time_s,overall");
  for (int id : report.class_ids) fmt::format_to(out, ",{}", name_of(names, id));
  fmt::format_to(out, "\n");
  for (std::size_t w = 0; w < report.overall_accuracy.size(); ++w) {
    fmt::format_to(out, "{},{},{}", w + 1, static_cast<double>(w + 1) * report.window_ms / 1000.0,
                   report.overall_accuracy[w]);
    for (Eigen::Index a = 0; a < report.per_app_accuracy.cols(); ++a) {
      fmt::format_to(out, ",{}", report.per_app_accuracy(static_cast<Eigen::Index>(w), a));
    }
    fmt::format_to(out, "\n");
  }
  return fmt::to_string(buf);
}

std::string format_openset_csv(std::span<const OpenSetReport> reports) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "threshold,known_accuracy,unknown_accuracy,known_retention,precision,recall\n");
  for (const auto& r : reports) {
    fmt::format_to(out, "{},{},{},{},{},{}\n", r.decision_threshold, r.known_accuracy,
                   r.unknown_accuracy, r.known_retention, r.precision, r.recall);
  }
  return fmt::to_string(buf);
}

}  // namespace freqprint
