#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace freqprint {

using Micros = std::int64_t;
using FreqKhz = std::uint32_t;

/// Class id reserved for rows that belong to no trained class.
inline constexpr int kUnknownClass = -1;

/// Discrete frequency levels (kHz) of one cluster, strictly increasing.
class FrequencyTable {
 public:
  FrequencyTable(int cluster_id, std::vector<FreqKhz> levels);

  int cluster_id() const noexcept { return cluster_id_; }
  std::size_t size() const noexcept { return levels_.size(); }
  std::span<const FreqKhz> levels() const noexcept { return levels_; }
  FreqKhz level(std::size_t index) const;
  FreqKhz max_level() const noexcept { return levels_.back(); }

  bool contains(FreqKhz freq_khz) const noexcept;
  // Throws UnknownFrequency.
  std::size_t index_of(FreqKhz freq_khz) const;

  bool operator==(const FrequencyTable&) const = default;

 private:
  int cluster_id_;
  std::vector<FreqKhz> levels_;
};

using FrequencyTables = std::vector<FrequencyTable>;

std::size_t freq_to_index(const FrequencyTable& table, FreqKhz freq_khz);

/// Position of (cluster, local level) in the index space formed by stacking
/// the cluster tables in cluster order.
std::size_t global_index(std::size_t cluster_id, std::size_t local_index,
                         const FrequencyTables& tables);
std::size_t total_levels(const FrequencyTables& tables) noexcept;

/// Stand-in two-cluster configuration: a 16-level low cluster spanning
/// 307200..1593600 kHz and an 18-level high cluster spanning 307200..2150400
/// kHz, both evenly spaced.
FrequencyTables default_tables();
FrequencyTable evenly_spaced_table(int cluster_id, FreqKhz lo, FreqKhz hi,
                                   std::size_t count);

struct DvfsSample {
  Micros start_us = 0;
  Micros end_us = 0;
  FreqKhz freq_khz = 0;

  bool operator==(const DvfsSample&) const = default;
};

using ClusterSamples = std::vector<DvfsSample>;

struct DvfsTrace {
  std::optional<std::string> label;
  std::vector<ClusterSamples> clusters;
  Micros capture_duration_us = 0;

  bool operator==(const DvfsTrace&) const = default;
};

// Throws NonMonotonicTime / UnknownFrequency / BadCluster / EmptyTrace.
void validate_samples(std::span<const DvfsSample> samples,
                      const FrequencyTable& table);
void validate_trace(const DvfsTrace& trace, const FrequencyTables& tables);

struct EmTrace {
  std::optional<std::string> label;
  std::vector<float> samples;
  double sample_rate_hz = 0.0;
  double duration_s = 0.0;

  bool operator==(const EmTrace&) const = default;
};

void validate_em(const EmTrace& trace);

struct UniformSeries {
  std::vector<double> values;
  double dt_us = 0.0;
  double origin_us = 0.0;
};

enum class FeatureKind { TimeDomain, FreqDomain };

/// Rows are signatures, columns are features.
struct FeatureMatrix {
  Eigen::MatrixXd rows;
  std::vector<int> labels;
  FeatureKind kind = FeatureKind::TimeDomain;

  Eigen::Index n_rows() const noexcept { return rows.rows(); }
  Eigen::Index n_features() const noexcept { return rows.cols(); }
};

// Throws LengthMismatch on label/row disagreement, InvalidArgument on NaN/Inf.
void validate_matrix(const FeatureMatrix& matrix);
FeatureMatrix select_rows(const FeatureMatrix& matrix,
                          std::span<const std::size_t> indices);

struct DatasetSplit {
  FeatureMatrix train;
  FeatureMatrix test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  double split_ratio = 0.75;
  std::uint64_t seed = 0;
};

/// Maps string labels to dense class ids in lexicographic label order.
class ClassMap {
 public:
  ClassMap() = default;
  explicit ClassMap(std::vector<std::string> labels);

  int id_of(const std::string& label) const;  // throws UnknownLabel
  int id_or_unknown(const std::optional<std::string>& label) const;
  const std::string& label_of(int id) const;
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int> ids_;
};

}  // namespace freqprint
