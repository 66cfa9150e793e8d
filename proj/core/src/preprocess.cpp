#include "freqprint/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/rng.hpp"

namespace freqprint {

UniformSeries interpolate_dvfs(std::span<const DvfsSample> samples, const FrequencyTable& table,
                               double dt_us, double duration_us) {
  if (samples.empty()) throw Error(ErrorCode::EmptyTrace, "cannot interpolate an empty trace");
  if (!(dt_us > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(duration_us > 0.0)) throw Error(ErrorCode::BadDuration, "duration must be positive");

  const auto n = static_cast<std::size_t>(std::llround(duration_us / dt_us));
  UniformSeries out;
  out.dt_us = dt_us;
  out.origin_us = 0.0;
  out.values.resize(n);

  std::size_t pos = 0;
  double current = static_cast<double>(table.index_of(samples[0].freq_khz));
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) * dt_us;
    bool moved = false;
    while (pos + 1 < samples.size() && static_cast<double>(samples[pos + 1].start_us) <= t) {
      ++pos;
      moved = true;
    }
    if (moved) current = static_cast<double>(table.index_of(samples[pos].freq_khz));
    out.values[j] = current;
  }
  return out;
}

std::vector<UniformSeries> interpolate_trace(const DvfsTrace& trace, const FrequencyTables& tables,
                                             double dt_us, double duration_us) {
  if (trace.clusters.size() != tables.size()) {
    throw Error(ErrorCode::BadCluster,
                fmt::format("trace has {} clusters, configuration has {}", trace.clusters.size(),
                            tables.size()));
  }
  std::vector<UniformSeries> out;
  out.reserve(tables.size());
  for (std::size_t c = 0; c < tables.size(); ++c) {
    auto series = interpolate_dvfs(trace.clusters[c], tables[c], dt_us, duration_us);
    const auto offset = static_cast<double>(global_index(c, 0, tables));
    for (auto& v : series.values) v += offset;
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<double> append_clusters(std::span<const UniformSeries> series) {
  if (series.empty()) return {};
  const auto len = series.front().values.size();
  const double dt = series.front().dt_us;
  std::vector<double> out;
  out.reserve(len * series.size());
  for (const auto& s : series) {
    if (s.values.size() != len || s.dt_us != dt) {
      throw Error(ErrorCode::LengthMismatch,
                  fmt::format("cluster series of length {} (dt {}) vs {} (dt {})", s.values.size(),
                              s.dt_us, len, dt));
    }
    out.insert(out.end(), s.values.begin(), s.values.end());
  }
  return out;
}

UniformSeries resample_em(const EmTrace& trace, std::size_t target_len) {
  if (target_len == 0) throw Error(ErrorCode::InvalidArgument, "target length must be positive");
  if (!(trace.sample_rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad sample rate");
  UniformSeries out;
  out.dt_us = 1e6 / trace.sample_rate_hz;
  out.values.assign(target_len, 0.0);
  const auto keep = std::min(target_len, trace.samples.size());
  for (std::size_t i = 0; i < keep; ++i) out.values[i] = static_cast<double>(trace.samples[i]);
  return out;
}

DatasetSplit split_dataset(const FeatureMatrix& matrix, double ratio, std::uint64_t seed) {
  validate_matrix(matrix);
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("split ratio {} outside (0,1)", ratio));
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) by_class[matrix.labels[i]].push_back(i);
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() < 2) {
      throw Error(ErrorCode::ClassTooSmall,
                  fmt::format("class {} has {} signature(s); need at least 2", cls, rows.size()));
    }
  }

  const std::size_t n = matrix.labels.size();
  const auto target = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));

  struct Share {
    int cls;
    std::size_t size;
    std::size_t train;
    double remainder;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [cls, rows] : by_class) {
    const double exact = ratio * static_cast<double>(rows.size());
    auto base = static_cast<std::size_t>(std::floor(exact));
    base = std::clamp<std::size_t>(base, 1, rows.size() - 1);
    shares.push_back({cls, rows.size(), base, exact - std::floor(exact)});
    assigned += base;
  }
  // Largest remainder first; ties go to the lower class id (map order).
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return shares[a].remainder > shares[b].remainder; });
  for (std::size_t pass = 0; assigned < target && pass < 2; ++pass) {
    for (std::size_t idx : order) {
      if (assigned >= target) break;
      auto& s = shares[idx];
      if (s.train + 1 < s.size && (pass == 1 || s.remainder > 0.0)) {
        ++s.train;
        ++assigned;
      }
    }
  }
  for (auto it = order.rbegin(); assigned > target && it != order.rend(); ++it) {
    auto& s = shares[*it];
    if (s.train > 1) {
      --s.train;
      --assigned;
    }
  }

  DatasetSplit split;
  split.split_ratio = ratio;
  split.seed = seed;
  for (const auto& s : shares) {
    auto rows = by_class[s.cls];
    Rng rng(mix_seed(seed, 0x5157, static_cast<std::uint64_t>(s.cls + 1)));
    for (std::size_t i = rows.size(); i > 1; --i) {
      std::swap(rows[i - 1], rows[rng.below(i)]);
    }
    split.train_indices.insert(split.train_indices.end(), rows.begin(),
                               rows.begin() + static_cast<std::ptrdiff_t>(s.train));
    split.test_indices.insert(split.test_indices.end(),
                              rows.begin() + static_cast<std::ptrdiff_t>(s.train), rows.end());
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  split.train = select_rows(matrix, split.train_indices);
  split.test = select_rows(matrix, split.test_indices);
  return split;
}

}  // namespace freqprint
