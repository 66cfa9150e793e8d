#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/ml.hpp"
#include "freqprint/parallel.hpp"
#include "freqprint/rng.hpp"
#include "ml_internal.hpp"

namespace freqprint {

namespace {

struct SplitChoice {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // sum over children of sum_c count_c^2 / n_child; larger is purer
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, std::span<const int> y, std::size_t n_classes,
              std::size_t max_features, Rng& rng)
      : x_(x), y_(y), n_classes_(n_classes), max_features_(max_features), rng_(rng),
        features_(static_cast<std::size_t>(x.cols())) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    tree.nodes.emplace_back();
    struct Work {
      std::int32_t node;
      std::vector<std::size_t> rows;
    };
    std::vector<Work> stack;
    stack.push_back({0, std::move(rows)});
    while (!stack.empty()) {
      Work work = std::move(stack.back());
      stack.pop_back();

      std::vector<double> counts(n_classes_, 0.0);
      for (auto r : work.rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
      const bool pure =
          std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;

      SplitChoice split;
      if (!pure && work.rows.size() >= 2) split = find_split(work.rows);

      if (split.feature < 0) {
        auto& node = tree.nodes[static_cast<std::size_t>(work.node)];
        node.leaf = static_cast<std::int32_t>(tree.distributions.size());
        const double total = static_cast<double>(work.rows.size());
        for (double c : counts) tree.distributions.push_back(c / total);
        continue;
      }

      std::vector<std::size_t> left, right;
      for (auto r : work.rows) {
        (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right).push_back(r);
      }
      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(work.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left_id;
      node.right = left_id + 1;
      stack.push_back({left_id + 1, std::move(right)});
      stack.push_back({left_id, std::move(left)});
    }
    return tree;
  }

 private:
  // Samples max_features candidates without replacement and keeps the best
  // split, scanning candidates in ascending feature order so equal scores
  // resolve to the lowest feature and then the lowest threshold. If none of
  // them can split the node (all constant), further features are drawn one
  // at a time until one can.
  SplitChoice find_split(const std::vector<std::size_t>& rows) {
    const std::size_t d = features_.size();
    const std::size_t m = std::min(max_features_, d);
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(features_[i], features_[i + rng_.below(d - i)]);
    }
    std::vector<std::size_t> candidates(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(candidates.begin(), candidates.end());

    SplitChoice best;
    for (auto f : candidates) evaluate_feature(rows, f, best);
    for (std::size_t i = m; best.feature < 0 && i < d; ++i) {
      std::swap(features_[i], features_[i + rng_.below(d - i)]);
      evaluate_feature(rows, features_[i], best);
    }
    return best;
  }

  void evaluate_feature(const std::vector<std::size_t>& rows, std::size_t f, SplitChoice& best) {
    const std::size_t n = rows.size();
    sorted_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      sorted_[i] = {x_(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)),
                    y_[rows[i]]};
    }
    std::sort(sorted_.begin(), sorted_.end());
    if (sorted_.front().first == sorted_.back().first) return;

    left_.assign(n_classes_, 0.0);
    right_.assign(n_classes_, 0.0);
    for (const auto& s : sorted_) right_[static_cast<std::size_t>(s.second)] += 1.0;
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (double c : right_) right_sq += c * c;

    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto cls = static_cast<std::size_t>(sorted_[i].second);
      left_sq += 2.0 * left_[cls] + 1.0;
      right_sq -= 2.0 * right_[cls] - 1.0;
      left_[cls] += 1.0;
      right_[cls] -= 1.0;
      const double a = sorted_[i].first;
      const double b = sorted_[i + 1].first;
      if (!(a < b)) continue;
      const double n_left = static_cast<double>(i + 1);
      const double n_right = static_cast<double>(n - i - 1);
      const double score = left_sq / n_left + right_sq / n_right;
      if (score > best.score) {
        double threshold = a + 0.5 * (b - a);
        if (!(threshold < b)) threshold = a;
        best = {static_cast<std::int32_t>(f), threshold, score};
      }
    }
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> y_;
  std::size_t n_classes_;
  std::size_t max_features_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, int>> sorted_;
  std::vector<double> left_;
  std::vector<double> right_;
};

}  // namespace

TrainedModel train_rf(const FeatureMatrix& train, const ForestParams& params) {
  validate_matrix(train);
  const auto n = static_cast<std::size_t>(train.rows.rows());
  const auto d = static_cast<std::size_t>(train.rows.cols());
  if (n == 0 || d == 0) throw Error(ErrorCode::EmptyInput, "random forest needs non-empty training data");
  if (params.n_estimators < 1) throw Error(ErrorCode::InvalidArgument, "n_estimators must be >= 1");

  auto classes = detail::sorted_classes(train.labels);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), train.labels[i]) -
                            classes.begin());
  }
  const std::size_t max_features =
      params.max_features > 0
          ? params.max_features
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));

  ForestModel forest;
  forest.trees.resize(params.n_estimators);
  parallel_for(params.n_estimators, [&](std::size_t t) {
    Rng rng(mix_seed(params.seed, 0x5246, t));
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder(train.rows, y, classes.size(), max_features, rng);
    forest.trees[t] = builder.build(std::move(rows));
  });
  return TrainedModel(std::move(classes), d, std::move(forest));
}

std::span<const double> tree_leaf(const DecisionTree& tree, std::size_t n_classes,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  std::size_t node = 0;
  while (tree.nodes[node].feature >= 0) {
    const auto& nd = tree.nodes[node];
    node = static_cast<std::size_t>(x(nd.feature) <= nd.threshold ? nd.left : nd.right);
  }
  return std::span<const double>(tree.distributions)
      .subspan(static_cast<std::size_t>(tree.nodes[node].leaf), n_classes);
}

namespace detail {

Eigen::MatrixXd forest_proba(const TrainedModel& model, const ForestModel& forest,
                             const Eigen::MatrixXd& rows) {
  const std::size_t n_classes = model.class_ids().size();
  Eigen::MatrixXd proba = Eigen::MatrixXd::Zero(rows.rows(), static_cast<Eigen::Index>(n_classes));
  Eigen::RowVectorXd x;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    x = rows.row(r);
    for (const auto& tree : forest.trees) {
      const auto leaf = tree_leaf(tree, n_classes, x);
      for (std::size_t c = 0; c < n_classes; ++c) proba(r, static_cast<Eigen::Index>(c)) += leaf[c];
    }
  }
  proba /= static_cast<double>(forest.trees.size());
  return proba;
}

}  // namespace detail

}  // namespace freqprint
