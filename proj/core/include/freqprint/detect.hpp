#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "freqprint/features.hpp"
#include "freqprint/ml.hpp"

namespace freqprint {

struct DetectionOptions {
  double window_ms = 100.0;
  double accuracy_threshold = 0.8;  // per-application accuracy that counts as detected
  double max_time_s = 10.0;         // reported for applications never detected
  PcaOptions pca;
};

struct DetectionReport {
  double window_ms = 0.0;
  double max_detection_time_s = 0.0;
  double accuracy_threshold = 0.0;
  std::vector<int> class_ids;
  std::vector<double> detection_time_s;   // per class, aligned with class_ids
  Eigen::MatrixXd per_app_accuracy;       // n_windows x n_classes
  std::vector<double> overall_accuracy;   // all test rows, per window prefix
};

/// Time of the first window prefix whose accuracy reaches the threshold
/// (prefix length x window), or max_time_s if none does.
double detection_time_from_curve(std::span<const double> accuracy_by_prefix, double window_ms,
                                 double threshold, double max_time_s);

/// For every prefix of w = 1..n windows: refit windowed PCA and the classifier
/// on the training rows truncated to w windows, then score each application's
/// test rows truncated the same way.
DetectionReport detection_latency(const FeatureMatrix& train, const FeatureMatrix& test,
                                  const WindowLayout& layout, const ModelSpec& spec,
                                  const DetectionOptions& options);

/// argmax class where the top probability reaches the threshold, otherwise
/// kUnknownClass.
std::vector<int> classify_with_rejection(const TrainedModel& model, const Eigen::MatrixXd& rows,
                                         double threshold);
std::vector<int> reject_below(const TrainedModel& model, const Eigen::MatrixXd& proba,
                              double threshold);

struct OpenSetReport {
  double decision_threshold = 0.0;
  double known_accuracy = 0.0;    // correct and not rejected / all known rows
  double unknown_accuracy = 0.0;  // rejected unknown rows / all unknown rows
  double known_retention = 0.0;   // known rows not rejected / all known rows
  double precision = 0.0;         // "known" is the positive class
  double recall = 0.0;
};

/// Precision is reported as 0 when nothing is accepted.
std::vector<OpenSetReport> open_set_eval(const TrainedModel& model, const FeatureMatrix& known_test,
                                         const FeatureMatrix& unknown_test,
                                         std::span<const double> thresholds);

std::string format_detection_csv(const DetectionReport& report, std::span<const std::string> names);
std::string format_accuracy_curve_csv(const DetectionReport& report,
                                      std::span<const std::string> names);
std::string format_openset_csv(std::span<const OpenSetReport> reports);

}  // namespace freqprint
