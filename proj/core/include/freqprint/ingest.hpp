#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freqprint/core_model.hpp"

namespace freqprint {

// DVFS logs hold one "start_us,end_us,freq_khz\n" record per poll, no header.

/// Parses a log body. Throws ParseError (with 1-based line number),
/// EmptyTrace, UnknownFrequency or NonMonotonicTime.
ClusterSamples parse_dvfs_log(std::string_view text, const FrequencyTable& table);
ClusterSamples read_dvfs_log(const std::filesystem::path& path, const FrequencyTable& table);

std::string format_dvfs_log(std::span<const DvfsSample> samples);
// Throws EmptyTrace for no samples, IoError on write failure.
void write_dvfs_log(std::span<const DvfsSample> samples, const std::filesystem::path& path);

/// EM traces live in two files next to each other: `<base>.hdr` (text
/// sidecar: sample rate, duration, sample count, optional label) and
/// `<base>.bin` (little-endian float32 payload).
void write_em_trace(const EmTrace& trace, const std::filesystem::path& base);
EmTrace read_em_trace(const std::filesystem::path& base);  // throws HeaderMismatch

struct ManifestEntry {
  std::string app_label;
  std::size_t trace_id = 0;
  std::vector<std::string> dvfs_files;  // relative to the corpus root, one per cluster
  std::optional<std::string> em_base;   // relative EM base path

  bool operator==(const ManifestEntry&) const = default;
};

struct CorpusManifest {
  std::filesystem::path root;
  FrequencyTables tables;
  Micros capture_duration_us = 0;
  std::vector<ManifestEntry> entries;
};

inline constexpr std::string_view kManifestName = "manifest.json";

/// Layout: root/<label>/trace_NNN.cluster<c>.csv and root/<label>/trace_NNN.em.{hdr,bin}.
ManifestEntry layout_entry(const std::string& label, std::size_t trace_id,
                           std::size_t n_clusters, bool with_em);

void write_manifest(const CorpusManifest& manifest);
/// Reads root/manifest.json and checks every referenced file exists and that
/// trace ids are unique per application. Throws ParseError / IoError.
CorpusManifest read_manifest(const std::filesystem::path& root);

DvfsTrace load_dvfs_trace(const CorpusManifest& manifest, const ManifestEntry& entry);
EmTrace load_em_trace(const CorpusManifest& manifest, const ManifestEntry& entry);
/// Writes the DVFS (and, when present, EM) files of one entry.
void store_trace(const CorpusManifest& manifest, const ManifestEntry& entry,
                 const DvfsTrace& trace, const EmTrace* em = nullptr);

std::vector<std::string> manifest_labels(const CorpusManifest& manifest);

}  // namespace freqprint
