#include "freqprint/governor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "freqprint/error.hpp"
#include "freqprint/parallel.hpp"
#include "freqprint/rng.hpp"

namespace freqprint {

namespace {

struct SegmentInstance {
  double start_ms;
  double end_ms;
  double mean;
  double jitter;
};

// Lays the cyclic segment list over [0, duration_ms). With random phase the
// cycle starts at a uniformly random offset before t = 0.
std::vector<SegmentInstance> build_timeline(const WorkloadProfile& profile, double duration_ms,
                                            const SimulationOptions& options, Rng& rng) {
  const double offset = rng.uniform() * profile.cycle_ms();
  double t = options.random_phase ? -offset : 0.0;
  std::vector<SegmentInstance> timeline;
  std::size_t i = 0;
  while (t < duration_ms) {
    const auto& seg = profile.segments[i % profile.segments.size()];
    const double stretch = std::max(0.2, 1.0 + options.duration_jitter * rng.normal());
    const double len = seg.duration_ms * stretch;
    if (t + len > 0.0) {
      timeline.push_back({t, t + len, seg.mean_utilization, seg.jitter_std});
    }
    t += len;
    ++i;
  }
  return timeline;
}

class TimelineCursor {
 public:
  explicit TimelineCursor(const std::vector<SegmentInstance>& timeline) : timeline_(timeline) {}

  // Time-weighted mean utilization over [a, b); ticks must be queried in
  // increasing order.
  double mean_over(double a, double b) {
    while (pos_ + 1 < timeline_.size() && timeline_[pos_].end_ms <= a) ++pos_;
    double acc = 0.0;
    for (std::size_t j = pos_; j < timeline_.size() && timeline_[j].start_ms < b; ++j) {
      const double lo = std::max(a, timeline_[j].start_ms);
      const double hi = std::min(b, timeline_[j].end_ms);
      if (hi > lo) acc += (hi - lo) * timeline_[j].mean;
    }
    return acc / (b - a);
  }

  double jitter_at(double t) const {
    for (std::size_t j = pos_; j < timeline_.size(); ++j) {
      if (timeline_[j].start_ms <= t && t < timeline_[j].end_ms) return timeline_[j].jitter;
    }
    return timeline_.empty() ? 0.0 : timeline_.back().jitter;
  }

 private:
  const std::vector<SegmentInstance>& timeline_;
  std::size_t pos_ = 0;
};

}  // namespace

double WorkloadProfile::cycle_ms() const noexcept {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration_ms;
  return total;
}

void validate_profile(const WorkloadProfile& profile, std::size_t n_clusters) {
  if (profile.app_label.empty()) {
    throw Error(ErrorCode::InvalidArgument, "profile label must not be empty");
  }
  for (char ch : profile.app_label) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
    if (!ok) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("profile label '{}' may only use [A-Za-z0-9_.-]", profile.app_label));
    }
  }
  if (profile.segments.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("profile '{}' has no segments", profile.app_label));
  }
  for (const auto& s : profile.segments) {
    if (!(s.duration_ms > 0.0) || !(s.mean_utilization >= 0.0 && s.mean_utilization <= 1.0) ||
        !(s.jitter_std >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("profile '{}' has an invalid segment", profile.app_label));
    }
  }
  if (profile.affinity.size() != n_clusters) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("profile '{}' has {} affinity weights for {} clusters",
                            profile.app_label, profile.affinity.size(), n_clusters));
  }
  double sum = 0.0;
  for (double w : profile.affinity) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("profile '{}' affinity outside [0,1]", profile.app_label));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("profile '{}' affinity sums to {}", profile.app_label, sum));
  }
}

void validate_governor(const GovernorConfig& config) {
  if (!(config.sampling_interval_ms > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "governor sampling interval must be positive");
  }
  if (!(config.up_threshold > 0.0 && config.up_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "up_threshold must lie in (0, 1)");
  }
  if (!(config.down_scale_factor > 0.0 && config.down_scale_factor <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "down_scale_factor must lie in (0, 1]");
  }
}

std::size_t governor_target_level(const GovernorConfig& config, const FrequencyTable& table,
                                  double utilization) {
  const std::size_t top = table.size() - 1;
  if (utilization > config.up_threshold) return top;
  const double needed = utilization / config.down_scale_factor;
  const double max_freq = static_cast<double>(table.max_level());
  const auto levels = table.levels();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (static_cast<double>(levels[i]) / max_freq >= needed) return i;
  }
  return top;
}

DvfsTrace simulate_governor(const WorkloadProfile& profile, const GovernorConfig& config,
                            const FrequencyTables& tables, double duration_s,
                            std::uint64_t seed, const SimulationOptions& options) {
  if (!(duration_s > 0.0)) {
    throw Error(ErrorCode::BadDuration, fmt::format("duration {} s must be positive", duration_s));
  }
  if (tables.empty()) throw Error(ErrorCode::BadCluster, "no frequency tables configured");
  validate_profile(profile, tables.size());
  validate_governor(config);

  const std::size_t n_clusters = tables.size();
  const double duration_ms = duration_s * 1000.0;
  const Micros duration_us = static_cast<Micros>(std::llround(duration_s * 1e6));

  Rng timeline_rng(mix_seed(seed, 1));
  Rng governor_rng(mix_seed(seed, 2));
  const auto timeline = build_timeline(profile, duration_ms, options, timeline_rng);

  double max_affinity = 0.0;
  for (double w : profile.affinity) max_affinity = std::max(max_affinity, w);

  // levels[c][k] holds from tick k (t = k * interval) until tick k + 1.
  const double interval = config.sampling_interval_ms;
  const auto n_ticks = static_cast<std::size_t>(std::floor(duration_ms / interval)) + 1;
  std::vector<std::vector<std::size_t>> levels(n_clusters, std::vector<std::size_t>(n_ticks));
  for (std::size_t c = 0; c < n_clusters; ++c) {
    levels[c][0] = std::min(config.initial_level, tables[c].size() - 1);
  }
  TimelineCursor cursor(timeline);
  for (std::size_t k = 1; k < n_ticks; ++k) {
    const double t = static_cast<double>(k) * interval;
    const double load = cursor.mean_over(t - interval, t);
    const double seg_jitter = cursor.jitter_at(t - 0.5 * interval);
    const double noise_std = std::sqrt(seg_jitter * seg_jitter +
                                       options.background_noise * options.background_noise);
    for (std::size_t c = 0; c < n_clusters; ++c) {
      const double share = max_affinity > 0.0 ? profile.affinity[c] / max_affinity : 0.0;
      const double u = std::clamp(load * share + noise_std * governor_rng.normal(), 0.0, 1.0);
      levels[c][k] = governor_target_level(config, tables[c], u);
    }
  }

  const double interval_us = interval * 1000.0;
  const auto& poll = options.polling;
  DvfsTrace trace;
  trace.label = profile.app_label;
  trace.capture_duration_us = duration_us;
  trace.clusters.resize(n_clusters);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    Rng poll_rng(mix_seed(seed, 3, c));
    auto& out = trace.clusters[c];
    out.reserve(static_cast<std::size_t>(duration_us / std::max<Micros>(1, poll.delay_us)) + 1);
    Micros t = static_cast<Micros>(poll_rng.below(static_cast<std::uint64_t>(poll.jitter_us) + 1));
    while (t < duration_us) {
      const auto latency = 1 + static_cast<Micros>(poll_rng.below(
                                   static_cast<std::uint64_t>(std::max<Micros>(1, poll.read_latency_us))));
      const auto tick = std::min(n_ticks - 1, static_cast<std::size_t>(
                                                  static_cast<double>(t) / interval_us));
      out.push_back({t, t + latency, tables[c].level(levels[c][tick])});
      t += poll.delay_us +
           static_cast<Micros>(poll_rng.below(static_cast<std::uint64_t>(poll.jitter_us) + 1));
    }
  }
  return trace;
}

std::uint64_t corpus_trace_seed(std::uint64_t seed, std::size_t profile_index,
                                std::size_t trace_index) noexcept {
  return mix_seed(seed, 0x100 + profile_index, trace_index);
}

std::vector<DvfsTrace> generate_corpus(const std::vector<WorkloadProfile>& profiles,
                                       const GovernorConfig& config,
                                       const FrequencyTables& tables,
                                       std::size_t n_traces_per_app, double duration_s,
                                       std::uint64_t seed, const SimulationOptions& options) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyProfileList, "no workload profiles given");
  if (n_traces_per_app < 1) {
    throw Error(ErrorCode::InvalidArgument, "need at least one trace per application");
  }
  std::vector<DvfsTrace> corpus(profiles.size() * n_traces_per_app);
  parallel_for(corpus.size(), [&](std::size_t i) {
    const std::size_t p = i / n_traces_per_app;
    const std::size_t j = i % n_traces_per_app;
    corpus[i] = simulate_governor(profiles[p], config, tables, duration_s,
                                  corpus_trace_seed(seed, p, j), options);
  });
  return corpus;
}

double highest_carrier_hz(const EmSynthesisConfig& config, const FrequencyTables& tables) {
  const auto n = total_levels(tables);
  return config.base_carrier_hz + config.carrier_step_hz * static_cast<double>(n == 0 ? 0 : n - 1);
}

EmTrace synthesize_em(const DvfsTrace& trace, const FrequencyTables& tables,
                      double sample_rate_hz, double noise_std, std::uint64_t seed,
                      const EmSynthesisConfig& config) {
  validate_trace(trace, tables);
  const double top = highest_carrier_hz(config, tables);
  if (!(sample_rate_hz >= 2.0 * top)) {
    throw Error(ErrorCode::AliasedCarrier,
                fmt::format("sample rate {} Hz cannot carry a {} Hz tone", sample_rate_hz, top));
  }
  if (noise_std < 0.0) throw Error(ErrorCode::InvalidArgument, "noise_std must be >= 0");

  EmTrace em;
  em.label = trace.label;
  em.sample_rate_hz = sample_rate_hz;
  em.duration_s = static_cast<double>(trace.capture_duration_us) * 1e-6;
  const auto n = static_cast<std::size_t>(std::llround(sample_rate_hz * em.duration_s));
  em.samples.assign(n, 0.0f);

  Rng rng(mix_seed(seed, 4));
  const std::size_t n_clusters = tables.size();
  std::vector<std::size_t> cursor(n_clusters, 0);
  std::vector<double> phase(n_clusters, 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t_us = static_cast<double>(i) * 1e6 / sample_rate_hz;
    double value = 0.0;
    for (std::size_t c = 0; c < n_clusters; ++c) {
      const auto& samples = trace.clusters[c];
      auto& pos = cursor[c];
      while (pos + 1 < samples.size() && static_cast<double>(samples[pos + 1].start_us) <= t_us) ++pos;
      const std::size_t local = tables[c].index_of(samples[pos].freq_khz);
      const std::size_t global = global_index(c, local, tables);
      const double freq_hz = config.base_carrier_hz + config.carrier_step_hz * static_cast<double>(global);
      const double scale = tables[c].size() > 1
                               ? 0.5 + 0.5 * static_cast<double>(local) /
                                           static_cast<double>(tables[c].size() - 1)
                               : 1.0;
      value += config.amplitude * scale * std::sin(phase[c]);
      phase[c] = std::fmod(phase[c] + two_pi * freq_hz / sample_rate_hz, two_pi);
    }
    value += noise_std * rng.normal();
    em.samples[i] = static_cast<float>(value);
  }
  return em;
}

namespace {

WorkloadProfile steady(std::string label, double util, double jitter, double little) {
  return {std::move(label), {{100.0, util, jitter}}, {little, 1.0 - little}};
}

WorkloadProfile burst(std::string label, double period_ms, double duty, double hi, double lo,
                      double jitter, double little) {
  return {std::move(label),
          {{period_ms * duty, hi, jitter}, {period_ms * (1.0 - duty), lo, jitter}},
          {little, 1.0 - little}};
}

}  // namespace

std::vector<WorkloadProfile> builtin_profiles() {
  std::vector<WorkloadProfile> p;
  p.push_back(steady("idle_poller", 0.05, 0.02, 0.8));
  p.push_back(steady("music_player", 0.30, 0.04, 0.6));
  p.push_back(steady("file_sync", 0.55, 0.05, 0.5));
  p.push_back(steady("benchmark_int", 0.95, 0.02, 0.3));
  // Pairs share duty cycle, levels and affinity and differ only in period.
  p.push_back(burst("chat_client", 40, 0.5, 0.9, 0.1, 0.05, 0.5));
  p.push_back(burst("maps_render", 100, 0.5, 0.9, 0.1, 0.05, 0.5));
  p.push_back(burst("game_2d", 40, 0.25, 0.95, 0.05, 0.05, 0.3));
  p.push_back(burst("game_3d", 100, 0.25, 0.95, 0.05, 0.05, 0.3));
  p.push_back(burst("email_client", 40, 0.75, 0.7, 0.2, 0.05, 0.7));
  p.push_back(burst("news_feed", 100, 0.75, 0.7, 0.2, 0.05, 0.7));
  p.push_back(burst("photo_filter", 50, 0.5, 0.6, 0.25, 0.05, 0.8));
  p.push_back(burst("pdf_reader", 100, 0.5, 0.6, 0.25, 0.05, 0.8));
  p.push_back(burst("video_player", 40, 0.4, 0.85, 0.3, 0.05, 0.6));
  p.push_back(burst("video_call", 80, 0.4, 0.85, 0.3, 0.05, 0.6));
  p.push_back(burst("camera_preview", 60, 0.3, 0.8, 0.15, 0.05, 0.4));
  p.push_back(burst("podcast_stream", 100, 0.3, 0.8, 0.15, 0.05, 0.4));
  p.push_back(burst("compiler", 2000, 0.5, 0.85, 0.2, 0.05, 0.4));
  p.push_back(burst("zip_archiver", 1000, 0.5, 0.85, 0.2, 0.05, 0.4));
  // Compute kernels with cluster placements and shapes no application above uses.
  p.push_back(burst("kernel_sha", 90, 0.5, 0.8, 0.45, 0.05, 0.05));
  p.push_back(burst("kernel_qsort", 70, 0.5, 0.9, 0.4, 0.05, 0.95));
  p.push_back({"kernel_fft", {{30, 0.3, 0.05}, {30, 0.6, 0.05}, {30, 0.95, 0.05}}, {0.5, 0.5}});
  p.push_back(burst("kernel_dijkstra", 40, 0.5, 0.65, 0.35, 0.05, 0.2));
  return p;
}

}  // namespace freqprint
