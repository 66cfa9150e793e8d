#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "freqprint/binary_io.hpp"
#include "freqprint/error.hpp"
#include "freqprint/features.hpp"
#include "freqprint/parallel.hpp"

namespace freqprint {

namespace {

constexpr std::string_view kPcaMagic = "FPPCA";
constexpr std::uint32_t kPcaVersion = 1;

// Largest-magnitude entry of every row made positive; the first entry wins
// ties.
void fix_signs(Eigen::MatrixXd& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const double a = std::abs(rows(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = c;
      }
    }
    if (rows(r, best) < 0.0) rows.row(r) *= -1.0;
  }
}

}  // namespace

std::size_t PcaModel::total_components() const noexcept {
  std::size_t total = 0;
  for (const auto& w : windows) total += w.k();
  return total;
}

WindowedPcaFitter::WindowedPcaFitter(const FeatureMatrix& train, const WindowLayout& layout,
                                     std::size_t max_keep)
    : layout_(layout) {
  if (train.rows.rows() < 2) {
    throw Error(ErrorCode::InvalidArgument, "windowed PCA needs at least 2 training rows");
  }
  if (static_cast<std::size_t>(train.rows.cols()) != layout.total_width()) {
    throw Error(ErrorCode::LayoutMismatch,
                fmt::format("matrix has {} columns, layout expects {}", train.rows.cols(),
                            layout.total_width()));
  }
  windows_.resize(layout.n_windows);
  const double denom = static_cast<double>(train.rows.rows() - 1);
  parallel_for(layout.n_windows, [&](std::size_t w) {
    Eigen::MatrixXd slice = window_slice(train.rows, layout, w);
    Decomposition d;
    d.mean = slice.colwise().mean().transpose();
    const double scale = std::max(1.0, slice.squaredNorm() / static_cast<double>(slice.size()));
    slice.rowwise() -= d.mean.transpose();

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(slice.cols(), slice.cols());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(slice.transpose(), 1.0 / denom);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("eigensolver failed on window {}", w));
    }
    const Eigen::VectorXd ascending = solver.eigenvalues();
    const auto dim = ascending.size();
    const double top = dim > 0 ? ascending(dim - 1) : 0.0;
    const double tol = std::max(1e-12 * scale, 1e-10 * top);
    Eigen::Index rank = 0;
    while (rank < dim && ascending(dim - 1 - rank) > tol) ++rank;

    d.eigenvalues.resize(rank);
    for (Eigen::Index i = 0; i < rank; ++i) d.eigenvalues(i) = ascending(dim - 1 - i);
    d.total_variance = d.eigenvalues.sum();
    const auto keep = std::min<Eigen::Index>(rank, static_cast<Eigen::Index>(max_keep));
    d.vectors.resize(keep, dim);
    for (Eigen::Index i = 0; i < keep; ++i) {
      d.vectors.row(i) = solver.eigenvectors().col(dim - 1 - i).transpose();
    }
    fix_signs(d.vectors);
    windows_[w] = std::move(d);
  });
}

PcaModel WindowedPcaFitter::model(std::size_t n_windows, const PcaOptions& options) const {
  if (n_windows == 0 || n_windows > windows_.size()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("window prefix {} outside [1, {}]", n_windows, windows_.size()));
  }
  if (options.budget < n_windows) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("component budget {} is smaller than the {} windows", options.budget,
                            n_windows));
  }
  if (options.per_window_max == 0) {
    throw Error(ErrorCode::InvalidArgument, "per_window_max must be positive");
  }

  std::vector<std::size_t> desired(n_windows, 0);
  for (std::size_t w = 0; w < n_windows; ++w) {
    const auto& d = windows_[w];
    const auto available = static_cast<std::size_t>(d.vectors.rows());
    if (available == 0 || !(d.total_variance > 0.0)) continue;
    std::size_t k = 0;
    double cumulative = 0.0;
    while (k < available && cumulative < options.variance_threshold) {
      cumulative += d.eigenvalues(static_cast<Eigen::Index>(k)) / d.total_variance;
      ++k;
    }
    desired[w] = std::min(k, options.per_window_max);
  }

  std::vector<std::size_t> chosen(n_windows, 0);
  std::size_t total = 0;
  for (auto k : desired) total += k;
  if (total <= options.budget) {
    chosen = desired;
  } else {
    total = 0;
    using Candidate = std::pair<double, std::ptrdiff_t>;  // (fraction, -window)
    std::priority_queue<Candidate> heap;
    auto push_next = [&](std::size_t w) {
      if (chosen[w] < desired[w]) {
        const auto& d = windows_[w];
        heap.emplace(d.eigenvalues(static_cast<Eigen::Index>(chosen[w])) / d.total_variance,
                     -static_cast<std::ptrdiff_t>(w));
      }
    };
    for (std::size_t w = 0; w < n_windows; ++w) {
      if (desired[w] > 0) {
        chosen[w] = 1;
        ++total;
      }
      push_next(w);
    }
    while (total < options.budget && !heap.empty()) {
      const auto w = static_cast<std::size_t>(-heap.top().second);
      heap.pop();
      ++chosen[w];
      ++total;
      push_next(w);
    }
  }

  PcaModel model;
  model.layout = layout_;
  model.windows.resize(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    const auto& d = windows_[w];
    auto& out = model.windows[w];
    const auto k = static_cast<Eigen::Index>(chosen[w]);
    out.mean = d.mean;
    out.components = d.vectors.topRows(k);
    out.eigenvalues = d.eigenvalues.head(k);
    out.explained = d.total_variance > 0.0 ? Eigen::VectorXd(out.eigenvalues / d.total_variance)
                                           : Eigen::VectorXd(out.eigenvalues);
    out.degenerate = d.vectors.rows() == 0;
  }
  return model;
}

PcaModel fit_windowed_pca(const FeatureMatrix& train, const WindowLayout& layout,
                          const PcaOptions& options) {
  WindowedPcaFitter fitter(train, layout, options.per_window_max);
  return fitter.model(layout.n_windows, options);
}

FeatureMatrix apply_pca(const PcaModel& model, const FeatureMatrix& matrix) {
  const auto& layout = model.layout;
  if (static_cast<std::size_t>(matrix.rows.cols()) != layout.total_width()) {
    throw Error(ErrorCode::LayoutMismatch,
                fmt::format("matrix has {} columns, PCA layout expects {}", matrix.rows.cols(),
                            layout.total_width()));
  }
  FeatureMatrix out;
  out.kind = matrix.kind;
  out.labels = matrix.labels;
  out.rows.resize(matrix.rows.rows(), static_cast<Eigen::Index>(model.total_components()));
  Eigen::Index col = 0;
  for (std::size_t w = 0; w < model.windows.size(); ++w) {
    const auto& win = model.windows[w];
    const auto k = static_cast<Eigen::Index>(win.k());
    if (k == 0) continue;
    Eigen::MatrixXd slice = window_slice(matrix.rows, layout, w);
    slice.rowwise() -= win.mean.transpose();
    out.rows.middleCols(col, k) = slice * win.components.transpose();
    col += k;
  }
  return out;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic(kPcaMagic);
  w.u32(kPcaVersion);
  w.u64(model.layout.n_blocks);
  w.u64(model.layout.n_windows);
  w.u64(model.layout.window_width);
  w.u64(model.windows.size());
  for (const auto& win : model.windows) {
    w.u32(win.degenerate ? 1 : 0);
    w.vector(win.mean);
    w.matrix(win.components);
    w.vector(win.eigenvalues);
    w.vector(win.explained);
  }
  w.save(path);
}

PcaModel load_pca(const std::filesystem::path& path) {
  auto r = BinaryReader::load(path);
  r.expect_magic(kPcaMagic);
  if (const auto v = r.u32(); v != kPcaVersion) {
    throw Error(ErrorCode::FormatError, fmt::format("unsupported PCA artifact version {}", v));
  }
  PcaModel model;
  model.layout.n_blocks = r.u64();
  model.layout.n_windows = r.u64();
  model.layout.window_width = r.u64();
  const auto n = r.u64();
  if (n > model.layout.n_windows) throw Error(ErrorCode::FormatError, "window count exceeds layout");
  model.windows.resize(n);
  for (auto& win : model.windows) {
    win.degenerate = r.u32() != 0;
    win.mean = r.vector();
    win.components = r.matrix();
    win.eigenvalues = r.vector();
    win.explained = r.vector();
    if (static_cast<std::size_t>(win.mean.size()) != model.layout.slice_width() ||
        (win.components.rows() > 0 &&
         static_cast<std::size_t>(win.components.cols()) != model.layout.slice_width())) {
      throw Error(ErrorCode::FormatError, "PCA window shape disagrees with layout");
    }
  }
  if (!r.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes in PCA artifact");
  return model;
}

}  // namespace freqprint
