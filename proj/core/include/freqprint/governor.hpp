#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqprint/core_model.hpp"

namespace freqprint {

struct WorkloadSegment {
  double duration_ms = 0.0;
  double mean_utilization = 0.0;
  double jitter_std = 0.0;
};

/// A foreground application's CPU demand. The segment list repeats
/// cyclically for the whole capture.
struct WorkloadProfile {
  std::string app_label;
  std::vector<WorkloadSegment> segments;
  std::vector<double> affinity;  // one weight per cluster, summing to 1

  double cycle_ms() const noexcept;
};

void validate_profile(const WorkloadProfile& profile, std::size_t n_clusters);

/// Ondemand-style policy: above up_threshold jump to the top level, otherwise
/// pick the lowest level whose relative capacity covers
/// utilization / down_scale_factor.
struct GovernorConfig {
  double sampling_interval_ms = 20.0;
  double up_threshold = 0.8;
  double down_scale_factor = 0.8;
  std::size_t initial_level = 0;
};

void validate_governor(const GovernorConfig& config);

/// The user-space monitor loop: one cpufreq read per acquisition.
struct PollingConfig {
  Micros delay_us = 500;         // minimum spacing between acquisitions
  Micros jitter_us = 100;        // extra uniform delay in [0, jitter_us]
  Micros read_latency_us = 60;   // eTime - sTime drawn from [1, read_latency_us]
};

struct SimulationOptions {
  double background_noise = 0.0;  // extra utilization noise std per governor tick
  double duration_jitter = 0.0;   // relative std of each segment instance's length
  bool random_phase = true;       // start each capture at a random point of the cycle
  PollingConfig polling;
};

/// Level a governor selects for a sampled utilization.
std::size_t governor_target_level(const GovernorConfig& config, const FrequencyTable& table,
                                  double utilization);

// Throws BadDuration when duration_s <= 0.
DvfsTrace simulate_governor(const WorkloadProfile& profile, const GovernorConfig& config,
                            const FrequencyTables& tables, double duration_s,
                            std::uint64_t seed, const SimulationOptions& options = {});

/// Seed of trace `trace_index` of profile `profile_index` in a corpus.
std::uint64_t corpus_trace_seed(std::uint64_t seed, std::size_t profile_index,
                                std::size_t trace_index) noexcept;

// Traces are ordered profile-major. Throws EmptyProfileList.
std::vector<DvfsTrace> generate_corpus(const std::vector<WorkloadProfile>& profiles,
                                       const GovernorConfig& config,
                                       const FrequencyTables& tables,
                                       std::size_t n_traces_per_app, double duration_s,
                                       std::uint64_t seed,
                                       const SimulationOptions& options = {});

struct EmSynthesisConfig {
  double amplitude = 1.0;
  double base_carrier_hz = 200.0;
  double carrier_step_hz = 50.0;  // per global frequency index
};

double highest_carrier_hz(const EmSynthesisConfig& config, const FrequencyTables& tables);

/// Sum over clusters of a sinusoid whose frequency follows the cluster's
/// global DVFS index and whose amplitude grows with the local level, plus
/// white Gaussian noise. Throws AliasedCarrier when the sample rate cannot
/// represent the highest carrier.
EmTrace synthesize_em(const DvfsTrace& trace, const FrequencyTables& tables,
                      double sample_rate_hz, double noise_std, std::uint64_t seed,
                      const EmSynthesisConfig& config = {});

/// The 22 application profiles used by the default corpus.
std::vector<WorkloadProfile> builtin_profiles();

}  // namespace freqprint
