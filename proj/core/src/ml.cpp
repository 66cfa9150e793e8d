#include "freqprint/ml.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "freqprint/binary_io.hpp"
#include "freqprint/error.hpp"
#include "ml_internal.hpp"

namespace freqprint {

namespace {

constexpr std::string_view kModelMagic = "FPMDL";
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Knn: return "knn";
    case ModelKind::LinearSvm: return "svm";
    case ModelKind::RandomForest: return "rf";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "knn") return ModelKind::Knn;
  if (name == "svm") return ModelKind::LinearSvm;
  if (name == "rf") return ModelKind::RandomForest;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown model '{}' (knn|svm|rf)", name));
}

TrainedModel::TrainedModel(std::vector<int> class_ids, std::size_t n_features, Parameters params)
    : class_ids_(std::move(class_ids)), n_features_(n_features), params_(std::move(params)) {
  if (class_ids_.empty()) throw Error(ErrorCode::InvalidArgument, "model needs at least one class");
  if (!std::is_sorted(class_ids_.begin(), class_ids_.end()) ||
      std::adjacent_find(class_ids_.begin(), class_ids_.end()) != class_ids_.end()) {
    throw Error(ErrorCode::InvalidArgument, "class ids must be unique and ascending");
  }
}

ModelKind TrainedModel::kind() const noexcept {
  switch (params_.index()) {
    case 0: return ModelKind::Knn;
    case 1: return ModelKind::LinearSvm;
    default: return ModelKind::RandomForest;
  }
}

int TrainedModel::column_of(int class_id) const noexcept {
  auto it = std::lower_bound(class_ids_.begin(), class_ids_.end(), class_id);
  if (it == class_ids_.end() || *it != class_id) return -1;
  return static_cast<int>(it - class_ids_.begin());
}

Eigen::MatrixXd predict_proba(const TrainedModel& model, const Eigen::MatrixXd& rows) {
  if (static_cast<std::size_t>(rows.cols()) != model.n_features()) {
    throw Error(ErrorCode::WidthMismatch,
                fmt::format("rows have {} features, model expects {}", rows.cols(), model.n_features()));
  }
  return std::visit(
      [&](const auto& p) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnModel>) {
          return detail::knn_proba(model, p, rows);
        } else if constexpr (std::is_same_v<T, SvmModel>) {
          return softmax_rows(svm_margins(model, rows));
        } else {
          return detail::forest_proba(model, p, rows);
        }
      },
      model.parameters());
}

std::vector<int> argmax_classes(const TrainedModel& model, const Eigen::MatrixXd& proba) {
  std::vector<int> out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index r = 0; r < proba.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < proba.cols(); ++c) {
      if (proba(r, c) > proba(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = model.class_ids()[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& rows) {
  return argmax_classes(model, predict_proba(model, rows));
}

Evaluation evaluate_predictions(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "prediction and label counts differ");
  }
  Evaluation ev;
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  ev.class_ids.assign(classes.begin(), classes.end());
  const auto n = static_cast<Eigen::Index>(ev.class_ids.size());
  ev.confusion = Eigen::MatrixXi::Zero(n, n);
  auto index = [&](int id) {
    return static_cast<Eigen::Index>(std::lower_bound(ev.class_ids.begin(), ev.class_ids.end(), id) -
                                     ev.class_ids.begin());
  };
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ev.confusion(index(truth[i]), index(predicted[i])) += 1;
    if (truth[i] == predicted[i]) ++correct;
  }
  ev.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  ev.predictions.assign(predicted.begin(), predicted.end());
  return ev;
}

Evaluation evaluate(const TrainedModel& model, const FeatureMatrix& test) {
  validate_matrix(test);
  const auto predicted = predict(model, test.rows);
  return evaluate_predictions(test.labels, predicted);
}

TrainedModel train_model(const ModelSpec& spec, const FeatureMatrix& train) {
  switch (spec.kind) {
    case ModelKind::Knn: return train_knn(train, spec.knn.k);
    case ModelKind::LinearSvm: return train_svm(train, spec.svm);
    case ModelKind::RandomForest: return train_rf(train, spec.forest);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic(kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.kind()));
  w.u64(model.n_features());
  w.u64(model.class_ids().size());
  for (int id : model.class_ids()) w.i32(id);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnModel>) {
          w.u64(p.k);
          w.matrix(p.rows);
          w.u64(p.labels.size());
          for (int l : p.labels) w.i32(l);
        } else if constexpr (std::is_same_v<T, SvmModel>) {
          w.matrix(p.weights);
          w.vector(p.biases);
        } else {
          w.u64(p.trees.size());
          for (const auto& tree : p.trees) {
            w.u64(tree.nodes.size());
            for (const auto& n : tree.nodes) {
              w.i32(n.feature);
              w.f64(n.threshold);
              w.i32(n.left);
              w.i32(n.right);
              w.i32(n.leaf);
            }
            w.f64s(tree.distributions);
          }
        }
      },
      model.parameters());
  w.save(path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  auto r = BinaryReader::load(path);
  r.expect_magic(kModelMagic);
  if (const auto v = r.u32(); v != kModelVersion) {
    throw Error(ErrorCode::FormatError, fmt::format("unsupported model artifact version {}", v));
  }
  const auto kind = r.u32();
  const auto n_features = r.u64();
  const auto n_classes = r.u64();
  if (n_classes > 1'000'000) throw Error(ErrorCode::FormatError, "implausible class count");
  std::vector<int> classes(n_classes);
  for (auto& c : classes) c = r.i32();

  TrainedModel::Parameters params;
  switch (kind) {
    case static_cast<std::uint32_t>(ModelKind::Knn): {
      KnnModel m;
      m.k = r.u64();
      m.rows = r.matrix();
      const auto n = r.u64();
      if (n != static_cast<std::uint64_t>(m.rows.rows())) throw Error(ErrorCode::FormatError, "KNN label count");
      m.labels.resize(n);
      for (auto& l : m.labels) l = r.i32();
      params = std::move(m);
      break;
    }
    case static_cast<std::uint32_t>(ModelKind::LinearSvm): {
      SvmModel m;
      m.weights = r.matrix();
      m.biases = r.vector();
      params = std::move(m);
      break;
    }
    case static_cast<std::uint32_t>(ModelKind::RandomForest): {
      ForestModel m;
      const auto n_trees = r.u64();
      if (n_trees > 1'000'000) throw Error(ErrorCode::FormatError, "implausible tree count");
      m.trees.resize(n_trees);
      for (auto& tree : m.trees) {
        const auto n_nodes = r.u64();
        if (n_nodes > 100'000'000) throw Error(ErrorCode::FormatError, "implausible node count");
        tree.nodes.resize(n_nodes);
        for (auto& nd : tree.nodes) {
          nd.feature = r.i32();
          nd.threshold = r.f64();
          nd.left = r.i32();
          nd.right = r.i32();
          nd.leaf = r.i32();
        }
        tree.distributions = r.f64s();
        for (const auto& nd : tree.nodes) {
          const bool ok =
              nd.feature >= 0
                  ? static_cast<std::uint64_t>(nd.feature) < n_features && nd.left > 0 &&
                        nd.right > 0 && static_cast<std::uint64_t>(nd.left) < n_nodes &&
                        static_cast<std::uint64_t>(nd.right) < n_nodes
                  : nd.leaf >= 0 && static_cast<std::uint64_t>(nd.leaf) + n_classes <=
                                        tree.distributions.size();
          if (!ok) throw Error(ErrorCode::FormatError, "corrupt decision tree node");
        }
      }
      params = std::move(m);
      break;
    }
    default:
      throw Error(ErrorCode::FormatError, fmt::format("unknown model kind tag {}", kind));
  }
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes in model artifact");
  return TrainedModel(std::move(classes), n_features, std::move(params));
}

}  // namespace freqprint
