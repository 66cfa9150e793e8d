#include "freqprint/ingest.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "freqprint/binary_io.hpp"
#include "freqprint/error.hpp"

namespace freqprint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
bool parse_field(std::string_view field, T& out) {
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

Error parse_error(std::size_t line, std::string_view what) {
  return Error(ErrorCode::ParseError, fmt::format("line {}: {}", line, what));
}

}  // namespace

ClusterSamples parse_dvfs_log(std::string_view text, const FrequencyTable& table) {
  ClusterSamples samples;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw parse_error(line_no, "missing newline terminator");
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;

    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
      throw parse_error(line_no, "expected three comma-separated fields");
    }
    DvfsSample s;
    if (!parse_field(line.substr(0, c1), s.start_us) ||
        !parse_field(line.substr(c1 + 1, c2 - c1 - 1), s.end_us) ||
        !parse_field(line.substr(c2 + 1), s.freq_khz)) {
      throw parse_error(line_no, fmt::format("malformed record '{}'", line));
    }
    if (s.end_us < s.start_us) {
      throw Error(ErrorCode::NonMonotonicTime,
                  fmt::format("line {}: end {} before start {}", line_no, s.end_us, s.start_us));
    }
    if (!samples.empty() && s.start_us < samples.back().start_us) {
      throw Error(ErrorCode::NonMonotonicTime,
                  fmt::format("line {}: start {} precedes previous start {}", line_no, s.start_us,
                              samples.back().start_us));
    }
    if (!table.contains(s.freq_khz)) {
      throw Error(ErrorCode::UnknownFrequency,
                  fmt::format("line {}: {} kHz is not a level of cluster {}", line_no, s.freq_khz,
                              table.cluster_id()));
    }
    samples.push_back(s);
  }
  if (samples.empty()) throw Error(ErrorCode::EmptyTrace, "DVFS log has no records");
  return samples;
}

ClusterSamples read_dvfs_log(const fs::path& path, const FrequencyTable& table) {
  const std::string text = read_text_file(path);
  try {
    return parse_dvfs_log(text, table);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_dvfs_log(std::span<const DvfsSample> samples) {
  fmt::memory_buffer buf;
  for (const auto& s : samples) fmt::format_to(std::back_inserter(buf), "{},{},{}\n", s.start_us, s.end_us, s.freq_khz);
  return fmt::to_string(buf);
}

void write_dvfs_log(std::span<const DvfsSample> samples, const fs::path& path) {
  if (samples.empty()) throw Error(ErrorCode::EmptyTrace, "refusing to write an empty DVFS log");
  write_text_file(path, format_dvfs_log(samples));
}

namespace {

fs::path with_suffix(const fs::path& base, std::string_view suffix) {
  fs::path p = base;
  p += suffix;
  return p;
}

}  // namespace

void write_em_trace(const EmTrace& trace, const fs::path& base) {
  if (!(trace.sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "EM sample rate must be positive");
  }
  std::string header = fmt::format("freqprint-em 1\nsample_rate_hz {}\nduration_s {}\nsamples {}\n",
                                   trace.sample_rate_hz, trace.duration_s, trace.samples.size());
  if (trace.label) header += fmt::format("label {}\n", *trace.label);
  write_text_file(with_suffix(base, ".hdr"), header);

  std::string payload;
  payload.resize(trace.samples.size() * 4);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(trace.samples[i]);
    for (std::size_t b = 0; b < 4; ++b) payload[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  write_text_file(with_suffix(base, ".bin"), payload);
}

EmTrace read_em_trace(const fs::path& base) {
  const auto hdr_path = with_suffix(base, ".hdr");
  const std::string header = read_text_file(hdr_path);
  EmTrace trace;
  std::size_t declared = 0;
  bool have_rate = false, have_duration = false, have_count = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < header.size()) {
    ++line_no;
    auto nl = header.find('\n', pos);
    if (nl == std::string::npos) nl = header.size();
    const std::string_view line(header.data() + pos, nl - pos);
    pos = nl + 1;
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos) throw parse_error(line_no, "expected 'key value'");
    const auto key = line.substr(0, sp);
    const auto value = line.substr(sp + 1);
    if (line_no == 1) {
      if (key != "freqprint-em" || value != "1") throw parse_error(1, "not a freqprint-em v1 header");
    } else if (key == "sample_rate_hz") {
      have_rate = parse_field(value, trace.sample_rate_hz);
    } else if (key == "duration_s") {
      have_duration = parse_field(value, trace.duration_s);
    } else if (key == "samples") {
      have_count = parse_field(value, declared);
    } else if (key == "label") {
      trace.label = std::string(value);
    } else {
      throw parse_error(line_no, fmt::format("unknown header key '{}'", key));
    }
  }
  if (!have_rate || !have_duration || !have_count) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: incomplete EM header", hdr_path.string()));
  }

  const std::string payload = read_text_file(with_suffix(base, ".bin"));
  if (payload.empty() || payload.size() % 4 != 0 || payload.size() / 4 != declared) {
    throw Error(ErrorCode::HeaderMismatch,
                fmt::format("{}: payload of {} bytes, header declares {} samples", base.string(),
                            payload.size(), declared));
  }
  trace.samples.resize(declared);
  for (std::size_t i = 0; i < declared; ++i) {
    std::uint32_t bits = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + b])) << (8 * b);
    }
    trace.samples[i] = std::bit_cast<float>(bits);
  }
  validate_em(trace);
  return trace;
}

ManifestEntry layout_entry(const std::string& label, std::size_t trace_id, std::size_t n_clusters,
                           bool with_em) {
  ManifestEntry e;
  e.app_label = label;
  e.trace_id = trace_id;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    e.dvfs_files.push_back(fmt::format("{}/trace_{:03}.cluster{}.csv", label, trace_id, c));
  }
  if (with_em) e.em_base = fmt::format("{}/trace_{:03}.em", label, trace_id);
  return e;
}

void write_manifest(const CorpusManifest& manifest) {
  json doc;
  doc["format"] = "freqprint-corpus";
  doc["version"] = 1;
  doc["capture_duration_us"] = manifest.capture_duration_us;
  json tables = json::array();
  for (const auto& t : manifest.tables) {
    tables.push_back({{"cluster", t.cluster_id()},
                      {"levels_khz", std::vector<FreqKhz>(t.levels().begin(), t.levels().end())}});
  }
  doc["tables"] = std::move(tables);
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j{{"label", e.app_label}, {"trace_id", e.trace_id}, {"dvfs", e.dvfs_files}};
    if (e.em_base) j["em"] = *e.em_base;
    entries.push_back(std::move(j));
  }
  doc["entries"] = std::move(entries);
  write_text_file(manifest.root / kManifestName, doc.dump(2) + "\n");
}

CorpusManifest read_manifest(const fs::path& root) {
  const auto path = root / kManifestName;
  const std::string text = read_text_file(path);
  CorpusManifest m;
  m.root = root;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "freqprint-corpus" || doc.at("version") != 1) {
      throw Error(ErrorCode::ParseError, "unsupported manifest format/version");
    }
    m.capture_duration_us = doc.at("capture_duration_us").get<Micros>();
    for (const auto& t : doc.at("tables")) {
      m.tables.emplace_back(t.at("cluster").get<int>(), t.at("levels_khz").get<std::vector<FreqKhz>>());
    }
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      e.app_label = j.at("label").get<std::string>();
      e.trace_id = j.at("trace_id").get<std::size_t>();
      e.dvfs_files = j.at("dvfs").get<std::vector<std::string>>();
      if (j.contains("em")) e.em_base = j.at("em").get<std::string>();
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path.string(), e.what()));
  }

  std::set<std::pair<std::string, std::size_t>> seen;
  for (const auto& e : m.entries) {
    if (!seen.emplace(e.app_label, e.trace_id).second) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("duplicate trace id {} for '{}'", e.trace_id, e.app_label));
    }
    if (e.dvfs_files.size() != m.tables.size()) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("entry {}/{} lists {} DVFS files for {} clusters", e.app_label,
                              e.trace_id, e.dvfs_files.size(), m.tables.size()));
    }
    for (const auto& f : e.dvfs_files) {
      if (!fs::exists(root / f)) throw Error(ErrorCode::IoError, fmt::format("missing {}", (root / f).string()));
    }
    if (e.em_base) {
      for (const char* suffix : {".hdr", ".bin"}) {
        const auto p = with_suffix(root / *e.em_base, suffix);
        if (!fs::exists(p)) throw Error(ErrorCode::IoError, fmt::format("missing {}", p.string()));
      }
    }
  }
  return m;
}

DvfsTrace load_dvfs_trace(const CorpusManifest& manifest, const ManifestEntry& entry) {
  DvfsTrace trace;
  trace.label = entry.app_label;
  trace.capture_duration_us = manifest.capture_duration_us;
  for (std::size_t c = 0; c < manifest.tables.size(); ++c) {
    trace.clusters.push_back(read_dvfs_log(manifest.root / entry.dvfs_files[c], manifest.tables[c]));
  }
  return trace;
}

EmTrace load_em_trace(const CorpusManifest& manifest, const ManifestEntry& entry) {
  if (!entry.em_base) {
    throw Error(ErrorCode::IoError,
                fmt::format("entry {}/{} has no EM trace", entry.app_label, entry.trace_id));
  }
  auto em = read_em_trace(manifest.root / *entry.em_base);
  if (em.label && *em.label != entry.app_label) {
    throw Error(ErrorCode::HeaderMismatch,
                fmt::format("EM header label '{}' disagrees with manifest '{}'", *em.label,
                            entry.app_label));
  }
  return em;
}

void store_trace(const CorpusManifest& manifest, const ManifestEntry& entry, const DvfsTrace& trace,
                 const EmTrace* em) {
  if (trace.clusters.size() != entry.dvfs_files.size()) {
    throw Error(ErrorCode::BadCluster, "trace and manifest entry disagree on cluster count");
  }
  for (std::size_t c = 0; c < trace.clusters.size(); ++c) {
    const auto path = manifest.root / entry.dvfs_files[c];
    fs::create_directories(path.parent_path());
    write_dvfs_log(trace.clusters[c], path);
  }
  if (em != nullptr) {
    if (!entry.em_base) throw Error(ErrorCode::InvalidArgument, "entry has no EM path");
    write_em_trace(*em, manifest.root / *entry.em_base);
  }
}

std::vector<std::string> manifest_labels(const CorpusManifest& manifest) {
  std::vector<std::string> labels;
  labels.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) labels.push_back(e.app_label);
  return labels;
}

}  // namespace freqprint
