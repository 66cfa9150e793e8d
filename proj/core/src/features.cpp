#include "freqprint/features.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/fft.hpp"

namespace freqprint {

std::size_t WindowPlan::fft_size() const noexcept { return next_pow2(samples_per_window); }

WindowPlan make_window_plan(double window_ms, std::size_t n_windows, double dt_us) {
  if (!(window_ms > 0.0) || !(dt_us > 0.0) || n_windows == 0) {
    throw Error(ErrorCode::InvalidArgument, "window plan needs positive window, dt and count");
  }
  WindowPlan plan;
  plan.window_ms = window_ms;
  plan.n_windows = n_windows;
  plan.samples_per_window = static_cast<std::size_t>(std::llround(window_ms * 1000.0 / dt_us));
  if (plan.samples_per_window < 2) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{} ms window holds fewer than 2 samples at dt {} us", window_ms, dt_us));
  }
  return plan;
}

std::vector<double> windowed_spectrum(const UniformSeries& series, const WindowPlan& plan,
                                      Taper taper) {
  if (plan.samples_per_window < 2 || plan.n_windows == 0) {
    throw Error(ErrorCode::InvalidArgument, "window plan must have >= 2 samples and >= 1 window");
  }
  if (series.values.size() < plan.covered_samples()) {
    throw Error(ErrorCode::TooShort,
                fmt::format("series of {} samples cannot fill {} windows of {}",
                            series.values.size(), plan.n_windows, plan.samples_per_window));
  }
  const std::size_t n = plan.samples_per_window;
  const std::size_t fft_n = plan.fft_size();
  const std::size_t bins = plan.spectrum_bins();

  std::vector<double> weights(n, 1.0);
  if (taper == Taper::Hann) {
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(n - 1));
    }
  }

  std::vector<double> out;
  out.reserve(plan.n_windows * bins);
  std::vector<double> window(n);
  for (std::size_t w = 0; w < plan.n_windows; ++w) {
    for (std::size_t i = 0; i < n; ++i) window[i] = series.values[w * n + i] * weights[i];
    const auto mag = magnitude_spectrum(window, fft_n);
    out.insert(out.end(), mag.begin(), mag.end());
  }
  return out;
}

Eigen::MatrixXd window_slice(const Eigen::MatrixXd& rows, const WindowLayout& layout,
                             std::size_t window) {
  Eigen::MatrixXd slice(rows.rows(), static_cast<Eigen::Index>(layout.slice_width()));
  const auto width = static_cast<Eigen::Index>(layout.window_width);
  for (std::size_t b = 0; b < layout.n_blocks; ++b) {
    slice.middleCols(static_cast<Eigen::Index>(b) * width, width) =
        rows.middleCols(static_cast<Eigen::Index>(layout.block_offset(b, window)), width);
  }
  return slice;
}

FeatureMatrix time_domain_features(std::span<const std::vector<double>> signatures,
                                   std::span<const int> labels) {
  if (signatures.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} signatures but {} labels", signatures.size(), labels.size()));
  }
  FeatureMatrix m;
  m.kind = FeatureKind::TimeDomain;
  const std::size_t width = signatures.empty() ? 0 : signatures.front().size();
  m.rows.resize(static_cast<Eigen::Index>(signatures.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    if (signatures[i].size() != width) {
      throw Error(ErrorCode::LengthMismatch,
                  fmt::format("signature {} has length {}, expected {}", i, signatures[i].size(), width));
    }
    m.rows.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(signatures[i].data(), static_cast<Eigen::Index>(width));
  }
  m.labels.assign(labels.begin(), labels.end());
  validate_matrix(m);
  return m;
}

}  // namespace freqprint
