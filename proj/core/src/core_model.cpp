#include "freqprint/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "freqprint/error.hpp"

namespace freqprint {

FrequencyTable::FrequencyTable(int cluster_id, std::vector<FreqKhz> levels)
    : cluster_id_(cluster_id), levels_(std::move(levels)) {
  if (cluster_id_ < 0) {
    throw Error(ErrorCode::BadCluster, fmt::format("negative cluster id {}", cluster_id_));
  }
  if (levels_.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("cluster {} has an empty frequency table", cluster_id_));
  }
  if (levels_.front() == 0) {
    throw Error(ErrorCode::InvalidArgument, "frequency levels must be positive");
  }
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (levels_[i] <= levels_[i - 1]) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("cluster {} levels not strictly increasing at position {}",
                              cluster_id_, i));
    }
  }
}

FreqKhz FrequencyTable::level(std::size_t index) const {
  if (index >= levels_.size()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("level index {} out of range for cluster {} ({} levels)", index,
                            cluster_id_, levels_.size()));
  }
  return levels_[index];
}

bool FrequencyTable::contains(FreqKhz freq_khz) const noexcept {
  return std::binary_search(levels_.begin(), levels_.end(), freq_khz);
}

std::size_t FrequencyTable::index_of(FreqKhz freq_khz) const {
  auto it = std::lower_bound(levels_.begin(), levels_.end(), freq_khz);
  if (it == levels_.end() || *it != freq_khz) {
    throw Error(ErrorCode::UnknownFrequency,
                fmt::format("{} kHz is not a level of cluster {}", freq_khz, cluster_id_));
  }
  return static_cast<std::size_t>(it - levels_.begin());
}

std::size_t freq_to_index(const FrequencyTable& table, FreqKhz freq_khz) {
  return table.index_of(freq_khz);
}

std::size_t global_index(std::size_t cluster_id, std::size_t local_index,
                         const FrequencyTables& tables) {
  if (cluster_id >= tables.size()) {
    throw Error(ErrorCode::BadCluster,
                fmt::format("cluster {} not configured ({} tables)", cluster_id, tables.size()));
  }
  if (local_index >= tables[cluster_id].size()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("local index {} out of range for cluster {}", local_index, cluster_id));
  }
  std::size_t offset = 0;
  for (std::size_t c = 0; c < cluster_id; ++c) offset += tables[c].size();
  return offset + local_index;
}

std::size_t total_levels(const FrequencyTables& tables) noexcept {
  std::size_t total = 0;
  for (const auto& t : tables) total += t.size();
  return total;
}

FrequencyTable evenly_spaced_table(int cluster_id, FreqKhz lo, FreqKhz hi, std::size_t count) {
  if (count == 0 || (count > 1 && hi <= lo)) {
    throw Error(ErrorCode::InvalidArgument, "evenly spaced table needs count >= 1 and hi > lo");
  }
  std::vector<FreqKhz> levels(count);
  if (count == 1) {
    levels[0] = lo;
  } else {
    const double step = static_cast<double>(hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      levels[i] = static_cast<FreqKhz>(std::llround(lo + step * static_cast<double>(i)));
    }
    levels.back() = hi;
  }
  return FrequencyTable(cluster_id, std::move(levels));
}

FrequencyTables default_tables() {
  return {evenly_spaced_table(0, 307200, 1593600, 16),
          evenly_spaced_table(1, 307200, 2150400, 18)};
}

void validate_samples(std::span<const DvfsSample> samples, const FrequencyTable& table) {
  if (samples.empty()) {
    throw Error(ErrorCode::EmptyTrace,
                fmt::format("cluster {} has no samples", table.cluster_id()));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.end_us < s.start_us) {
      throw Error(ErrorCode::NonMonotonicTime,
                  fmt::format("sample {} ends ({}) before it starts ({})", i, s.end_us, s.start_us));
    }
    if (i > 0 && s.start_us < samples[i - 1].start_us) {
      throw Error(ErrorCode::NonMonotonicTime,
                  fmt::format("sample {} starts at {} before previous start {}", i, s.start_us,
                              samples[i - 1].start_us));
    }
    if (!table.contains(s.freq_khz)) {
      throw Error(ErrorCode::UnknownFrequency,
                  fmt::format("sample {}: {} kHz is not a level of cluster {}", i, s.freq_khz,
                              table.cluster_id()));
    }
  }
}

void validate_trace(const DvfsTrace& trace, const FrequencyTables& tables) {
  if (trace.clusters.empty() || trace.clusters.size() != tables.size()) {
    throw Error(ErrorCode::BadCluster,
                fmt::format("trace has {} clusters, configuration has {}", trace.clusters.size(),
                            tables.size()));
  }
  if (trace.capture_duration_us <= 0) {
    throw Error(ErrorCode::BadDuration, "capture duration must be positive");
  }
  for (std::size_t c = 0; c < tables.size(); ++c) validate_samples(trace.clusters[c], tables[c]);
}

void validate_em(const EmTrace& trace) {
  if (!(trace.sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "EM sample rate must be positive");
  }
  const double expected = std::round(trace.sample_rate_hz * trace.duration_s);
  if (std::abs(static_cast<double>(trace.samples.size()) - expected) > 1.0) {
    throw Error(ErrorCode::HeaderMismatch,
                fmt::format("EM trace has {} samples, rate x duration gives {}",
                            trace.samples.size(), expected));
  }
}

void validate_matrix(const FeatureMatrix& matrix) {
  if (static_cast<Eigen::Index>(matrix.labels.size()) != matrix.rows.rows()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} labels for {} rows", matrix.labels.size(), matrix.rows.rows()));
  }
  if (!matrix.rows.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "feature matrix contains NaN or Inf");
  }
}

FeatureMatrix select_rows(const FeatureMatrix& matrix, std::span<const std::size_t> indices) {
  FeatureMatrix out;
  out.kind = matrix.kind;
  out.rows.resize(static_cast<Eigen::Index>(indices.size()), matrix.rows.cols());
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    if (src >= matrix.rows.rows()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("row {} out of range", indices[i]));
    }
    out.rows.row(static_cast<Eigen::Index>(i)) = matrix.rows.row(src);
    out.labels.push_back(matrix.labels[indices[i]]);
  }
  return out;
}

ClassMap::ClassMap(std::vector<std::string> labels) {
  std::set<std::string> unique(labels.begin(), labels.end());
  labels_.assign(unique.begin(), unique.end());
  for (std::size_t i = 0; i < labels_.size(); ++i) ids_.emplace(labels_[i], static_cast<int>(i));
}

int ClassMap::id_of(const std::string& label) const {
  auto it = ids_.find(label);
  if (it == ids_.end()) {
    throw Error(ErrorCode::UnknownLabel, fmt::format("label '{}' is not in the corpus", label));
  }
  return it->second;
}

int ClassMap::id_or_unknown(const std::optional<std::string>& label) const {
  if (!label) return kUnknownClass;
  auto it = ids_.find(*label);
  return it == ids_.end() ? kUnknownClass : it->second;
}

const std::string& ClassMap::label_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= labels_.size()) {
    static const std::string unknown = "Unknown";
    return unknown;
  }
  return labels_[static_cast<std::size_t>(id)];
}

}  // namespace freqprint
