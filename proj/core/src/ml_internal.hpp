#pragma once

#include <span>
#include <vector>

#include "freqprint/ml.hpp"

namespace freqprint::detail {

std::vector<int> sorted_classes(std::span<const int> labels);

Eigen::MatrixXd knn_proba(const TrainedModel& model, const KnnModel& knn,
                          const Eigen::MatrixXd& rows);
Eigen::MatrixXd forest_proba(const TrainedModel& model, const ForestModel& forest,
                             const Eigen::MatrixXd& rows);

}  // namespace freqprint::detail
