#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "freqprint/core_model.hpp"

namespace freqprint {

/// Splits a uniform series into consecutive non-overlapping windows.
struct WindowPlan {
  double window_ms = 100.0;
  std::size_t n_windows = 100;
  std::size_t samples_per_window = 200;

  std::size_t covered_samples() const noexcept { return n_windows * samples_per_window; }
  /// FFT length: samples per window rounded up to a power of two.
  std::size_t fft_size() const noexcept;
  /// One-sided bins per window, DC through Nyquist.
  std::size_t spectrum_bins() const noexcept { return fft_size() / 2 + 1; }
};

/// Derives samples_per_window from the series sampling interval. Throws
/// InvalidArgument if fewer than 2 samples land in a window.
WindowPlan make_window_plan(double window_ms, std::size_t n_windows, double dt_us);

enum class Taper { Rectangular, Hann };

/// Per-window magnitude spectrum, windows concatenated in time order. Throws
/// TooShort when the series does not cover every window.
std::vector<double> windowed_spectrum(const UniformSeries& series, const WindowPlan& plan,
                                      Taper taper = Taper::Rectangular);

/// Column layout of a windowed feature row: `n_blocks` consecutive blocks
/// (one per cluster or channel), each holding `n_windows` windows of
/// `window_width` columns. Window w of the row is the union of window w of
/// every block.
struct WindowLayout {
  std::size_t n_blocks = 1;
  std::size_t n_windows = 1;
  std::size_t window_width = 1;

  std::size_t total_width() const noexcept { return n_blocks * n_windows * window_width; }
  std::size_t slice_width() const noexcept { return n_blocks * window_width; }
  std::size_t block_offset(std::size_t block, std::size_t window) const noexcept {
    return block * n_windows * window_width + window * window_width;
  }

  bool operator==(const WindowLayout&) const = default;
};

/// Copies window `w` of every row into a rows x slice_width matrix.
Eigen::MatrixXd window_slice(const Eigen::MatrixXd& rows, const WindowLayout& layout,
                             std::size_t window);

/// Stacks per-signature vectors as matrix rows. Throws LengthMismatch.
FeatureMatrix time_domain_features(std::span<const std::vector<double>> signatures,
                                   std::span<const int> labels);

struct PcaOptions {
  std::size_t budget = 660;          // total retained components across windows
  std::size_t per_window_max = 17;
  double variance_threshold = 0.99;  // cumulative explained-variance target per window
};

struct WindowPca {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   // k x slice_width, orthonormal rows
  Eigen::VectorXd eigenvalues;  // k retained covariance eigenvalues, non-increasing
  Eigen::VectorXd explained;    // k explained-variance fractions
  bool degenerate = false;      // constant slice: nothing retained

  std::size_t k() const noexcept { return static_cast<std::size_t>(components.rows()); }
};

/// Independent PCA per window. `windows` may cover only a prefix of the
/// layout's windows.
struct PcaModel {
  WindowLayout layout;
  std::vector<WindowPca> windows;

  std::size_t total_components() const noexcept;
};

/// Caches the eigendecomposition of every window of a training matrix so that
/// models for any window prefix can be cut without refitting.
class WindowedPcaFitter {
 public:
  /// Throws InvalidArgument for fewer than 2 rows, LayoutMismatch on width.
  WindowedPcaFitter(const FeatureMatrix& train, const WindowLayout& layout, std::size_t max_keep);

  /// Model over windows [0, n_windows). Per window k is the smallest count
  /// reaching the variance threshold, clamped to per_window_max and the
  /// window's numerical rank; when the total exceeds the budget, every window
  /// keeps one component and the rest of the budget goes to the next-best
  /// explained-variance fraction across windows (ties to the earlier window).
  PcaModel model(std::size_t n_windows, const PcaOptions& options) const;

  const WindowLayout& layout() const noexcept { return layout_; }

 private:
  struct Decomposition {
    Eigen::VectorXd mean;
    Eigen::VectorXd eigenvalues;  // all eigenvalues above tolerance, descending
    Eigen::MatrixXd vectors;      // top min(max_keep, rank) eigenvectors as rows, signs fixed
    double total_variance = 0.0;
  };

  WindowLayout layout_;
  std::vector<Decomposition> windows_;
};

PcaModel fit_windowed_pca(const FeatureMatrix& train, const WindowLayout& layout,
                          const PcaOptions& options);

/// Centered projection per window, windows concatenated. Output width is
/// model.total_components(). Throws LayoutMismatch.
FeatureMatrix apply_pca(const PcaModel& model, const FeatureMatrix& matrix);

void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);  // throws FormatError

}  // namespace freqprint
