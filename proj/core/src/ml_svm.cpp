#include <cmath>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/ml.hpp"
#include "freqprint/parallel.hpp"
#include "freqprint/rng.hpp"
#include "ml_internal.hpp"

namespace freqprint {

// Features are standardised internally (zero mean, unit variance per column)
// and the learned hyperplanes are mapped back to input units, so the stored
// weights act on raw feature vectors. The bias is learned as the weight of a
// constant feature.
TrainedModel train_svm(const FeatureMatrix& train, const SvmParams& params) {
  validate_matrix(train);
  const auto n = train.rows.rows();
  const auto d = train.rows.cols();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "SVM needs training rows");
  auto classes = detail::sorted_classes(train.labels);
  if (classes.size() < 2) {
    throw Error(ErrorCode::SingleClass, "a linear SVM needs at least two classes");
  }
  if (!(params.c > 0.0) || params.epochs == 0) {
    throw Error(ErrorCode::InvalidArgument, "SVM needs C > 0 and at least one epoch");
  }

  const Eigen::RowVectorXd mean = train.rows.colwise().mean();
  Eigen::RowVectorXd scale(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (train.rows.col(j).array() - mean(j)).square().sum() / static_cast<double>(n);
    scale(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  // Row-major copy with a trailing constant column: one contiguous row per
  // stochastic step.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor z(n, d + 1);
  z.leftCols(d) = ((train.rows.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  z.col(d).setOnes();

  const double lambda = 1.0 / (params.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);
  const std::size_t total_steps = params.epochs * static_cast<std::size_t>(n);
  const std::size_t average_from = total_steps / 2;

  SvmModel model;
  model.weights.resize(static_cast<Eigen::Index>(classes.size()), d);
  model.biases.resize(static_cast<Eigen::Index>(classes.size()));

  parallel_for(classes.size(), [&](std::size_t ci) {
    const int positive = classes[ci];
    Rng rng(mix_seed(params.seed, 0x5356, ci));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(d + 1);
    std::size_t averaged = 0;
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      for (const auto i : order) {
        ++t;
        const double y = train.labels[static_cast<std::size_t>(i)] == positive ? 1.0 : -1.0;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double margin = y * z.row(i).dot(w);
        w *= 1.0 - 1.0 / static_cast<double>(t);
        if (margin < 1.0) w.noalias() += (eta * y) * z.row(i).transpose();
        const double norm = w.norm();
        if (norm > radius) w *= radius / norm;
        if (t > average_from) {
          avg += w;
          ++averaged;
        }
      }
    }
    avg /= static_cast<double>(std::max<std::size_t>(1, averaged));

    const Eigen::RowVectorXd wz = avg.head(d).transpose();
    const Eigen::RowVectorXd raw = wz.array() / scale.array();
    model.weights.row(static_cast<Eigen::Index>(ci)) = raw;
    model.biases(static_cast<Eigen::Index>(ci)) = avg(d) - raw.dot(mean);
  });

  return TrainedModel(std::move(classes), static_cast<std::size_t>(d), std::move(model));
}

Eigen::MatrixXd svm_margins(const TrainedModel& model, const Eigen::MatrixXd& rows) {
  const auto* svm = std::get_if<SvmModel>(&model.parameters());
  if (svm == nullptr) throw Error(ErrorCode::InvalidArgument, "model is not a linear SVM");
  if (static_cast<std::size_t>(rows.cols()) != model.n_features()) {
    throw Error(ErrorCode::WidthMismatch,
                fmt::format("rows have {} features, model expects {}", rows.cols(), model.n_features()));
  }
  Eigen::MatrixXd margins = rows * svm->weights.transpose();
  margins.rowwise() += svm->biases.transpose();
  return margins;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& margins) {
  Eigen::MatrixXd out(margins.rows(), margins.cols());
  for (Eigen::Index r = 0; r < margins.rows(); ++r) {
    const double top = margins.row(r).maxCoeff();
    out.row(r) = (margins.row(r).array() - top).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

}  // namespace freqprint
