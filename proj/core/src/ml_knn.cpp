#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/ml.hpp"
#include "freqprint/preprocess.hpp"
#include "ml_internal.hpp"

namespace freqprint {

namespace detail {

std::vector<int> sorted_classes(std::span<const int> labels) {
  std::set<int> unique(labels.begin(), labels.end());
  return {unique.begin(), unique.end()};
}

// Neighbours are ranked by (squared distance, class id) so the result does
// not depend on the order the training rows were stored in.
Eigen::MatrixXd knn_proba(const TrainedModel& model, const KnnModel& knn,
                          const Eigen::MatrixXd& rows) {
  const auto n_train = knn.rows.rows();
  Eigen::MatrixXd proba =
      Eigen::MatrixXd::Zero(rows.rows(), static_cast<Eigen::Index>(model.class_ids().size()));
  std::vector<std::pair<double, int>> ranked(static_cast<std::size_t>(n_train));
  const auto k = static_cast<std::ptrdiff_t>(knn.k);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index i = 0; i < n_train; ++i) {
      ranked[static_cast<std::size_t>(i)] = {(knn.rows.row(i) - rows.row(r)).squaredNorm(),
                                             knn.labels[static_cast<std::size_t>(i)]};
    }
    std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
    for (std::ptrdiff_t j = 0; j < k; ++j) {
      proba(r, model.column_of(ranked[static_cast<std::size_t>(j)].second)) += 1.0;
    }
  }
  proba /= static_cast<double>(knn.k);
  return proba;
}

}  // namespace detail

TrainedModel train_knn(const FeatureMatrix& train, std::size_t k) {
  validate_matrix(train);
  if (train.rows.rows() == 0) throw Error(ErrorCode::EmptyInput, "KNN needs training rows");
  if (k < 1 || k > static_cast<std::size_t>(train.rows.rows())) {
    throw Error(ErrorCode::KTooLarge,
                fmt::format("k = {} with {} training rows", k, train.rows.rows()));
  }
  KnnModel m{train.rows, train.labels, k};
  return TrainedModel(detail::sorted_classes(train.labels), static_cast<std::size_t>(train.rows.cols()),
                      std::move(m));
}

std::size_t select_knn_k(const FeatureMatrix& train, std::size_t k_min, std::size_t k_max,
                         std::uint64_t seed, double fold_ratio) {
  if (k_min < 1 || k_max < k_min) throw Error(ErrorCode::InvalidArgument, "bad k range");
  const auto fold = split_dataset(train, fold_ratio, seed);
  const auto limit = std::min<std::size_t>(k_max, static_cast<std::size_t>(fold.train.rows.rows()));
  std::size_t best_k = k_min;
  double best_acc = -1.0;
  for (std::size_t k = k_min; k <= limit; ++k) {
    const auto model = train_knn(fold.train, k);
    const double acc = evaluate(model, fold.test).accuracy;
    if (acc > best_acc) {
      best_acc = acc;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace freqprint
