#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "freqprint/core_model.hpp"

namespace freqprint {

enum class ModelKind { Knn, LinearSvm, RandomForest };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);  // knn | svm | rf

struct KnnParams {
  std::size_t k = 5;
};

/// One-vs-rest linear SVM trained by stochastic sub-gradient descent on the
/// primal objective 1/(2C) |w|^2 + mean hinge loss (Pegasos schedule).
struct SvmParams {
  double c = 1.0;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
};

struct ForestParams {
  std::size_t n_estimators = 40;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0 means floor(sqrt(d)), at least 1
  std::uint64_t seed = 0;
};

struct KnnModel {
  Eigen::MatrixXd rows;
  std::vector<int> labels;
  std::size_t k = 1;
};

struct SvmModel {
  Eigen::MatrixXd weights;  // n_classes x d, in input feature units
  Eigen::VectorXd biases;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf = -1;     // offset of the leaf's class distribution
};

struct DecisionTree {
  std::vector<TreeNode> nodes;        // nodes[0] is the root
  std::vector<double> distributions;  // n_classes entries per leaf
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

class TrainedModel {
 public:
  using Parameters = std::variant<KnnModel, SvmModel, ForestModel>;

  TrainedModel(std::vector<int> class_ids, std::size_t n_features, Parameters params);

  ModelKind kind() const noexcept;
  const std::vector<int>& class_ids() const noexcept { return class_ids_; }
  std::size_t n_features() const noexcept { return n_features_; }
  const Parameters& parameters() const noexcept { return params_; }

  /// Column of `class_id` in predict_proba output, or -1.
  int column_of(int class_id) const noexcept;

 private:
  std::vector<int> class_ids_;
  std::size_t n_features_;
  Parameters params_;
};

TrainedModel train_knn(const FeatureMatrix& train, std::size_t k);  // throws KTooLarge
TrainedModel train_svm(const FeatureMatrix& train, const SvmParams& params = {});  // throws SingleClass
TrainedModel train_rf(const FeatureMatrix& train, const ForestParams& params = {});

/// n_rows x n_classes; columns follow model.class_ids(). Throws WidthMismatch.
Eigen::MatrixXd predict_proba(const TrainedModel& model, const Eigen::MatrixXd& rows);
/// Argmax class id per row; ties resolve to the lowest class id.
std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& rows);
std::vector<int> argmax_classes(const TrainedModel& model, const Eigen::MatrixXd& proba);

/// Raw one-vs-rest margins of an SVM model (n_rows x n_classes).
Eigen::MatrixXd svm_margins(const TrainedModel& model, const Eigen::MatrixXd& rows);
/// Row-wise softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& margins);
/// Leaf distribution reached by `x` in one tree.
std::span<const double> tree_leaf(const DecisionTree& tree, std::size_t n_classes,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> class_ids;     // row/column order of the confusion matrix
  Eigen::MatrixXi confusion;      // rows = true class, cols = predicted class
  std::vector<int> predictions;
};

Evaluation evaluate(const TrainedModel& model, const FeatureMatrix& test);
Evaluation evaluate_predictions(std::span<const int> truth, std::span<const int> predicted);

/// Kind plus hyper-parameters, enough to retrain a model on new data.
struct ModelSpec {
  ModelKind kind = ModelKind::RandomForest;
  KnnParams knn;
  SvmParams svm;
  ForestParams forest;
};

TrainedModel train_model(const ModelSpec& spec, const FeatureMatrix& train);

/// Sweeps k over [k_min, k_max] on a stratified validation fold carved from
/// `train` and returns the most accurate k (smallest on ties).
std::size_t select_knn_k(const FeatureMatrix& train, std::size_t k_min, std::size_t k_max,
                         std::uint64_t seed, double fold_ratio = 0.75);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);  // throws FormatError

}  // namespace freqprint
