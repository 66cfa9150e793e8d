#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "freqprint/core_model.hpp"

namespace freqprint {

/// Zero-order hold of the polled frequency onto t = origin + j * dt for
/// j < round(duration / dt). Each record holds from its start time (sTime)
/// until the next record's start; grid points before the first record take
/// the first value and points after the last take the last. Values are local
/// level indexes of `table`. Throws EmptyTrace.
UniformSeries interpolate_dvfs(std::span<const DvfsSample> samples, const FrequencyTable& table,
                               double dt_us, double duration_us);

/// interpolate_dvfs per cluster, shifted into the combined index space.
std::vector<UniformSeries> interpolate_trace(const DvfsTrace& trace, const FrequencyTables& tables,
                                             double dt_us, double duration_us);

/// Concatenates cluster series in order. Throws LengthMismatch.
std::vector<double> append_clusters(std::span<const UniformSeries> series);

/// First min(len, target_len) samples, zero padded to target_len.
UniformSeries resample_em(const EmTrace& trace, std::size_t target_len);

/// Stratified shuffle split. The train size is round(ratio * N); each class
/// receives its proportional share (largest remainder, ties to the lower
/// class id) and keeps at least one row on each side. Throws ClassTooSmall.
DatasetSplit split_dataset(const FeatureMatrix& matrix, double ratio, std::uint64_t seed);

}  // namespace freqprint
