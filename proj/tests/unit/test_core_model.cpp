#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

#include "freqprint/core_model.hpp"
#include "freqprint/error.hpp"
#include "freqprint/parallel.hpp"
#include "freqprint/rng.hpp"

using namespace freqprint;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected freqprint::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("frequency table rejects unsorted or empty levels") {
  CHECK(code_of([] { FrequencyTable(0, {}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { FrequencyTable(0, {300, 300}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { FrequencyTable(0, {500, 300}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("frequency lookup") {
  const FrequencyTable t(0, {300, 600, 900});
  CHECK(t.size() == 3);
  CHECK(t.max_level() == 900);
  CHECK(t.contains(600));
  CHECK_FALSE(t.contains(601));
  CHECK(t.index_of(900) == 2);
  CHECK(freq_to_index(t, 300) == 0);
  CHECK(code_of([&] { (void)t.index_of(601); }) == ErrorCode::UnknownFrequency);
  CHECK(code_of([&] { (void)t.level(3); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("default tables span the documented ranges") {
  const auto tables = default_tables();
  REQUIRE(tables.size() == 2);
  CHECK(tables[0].size() == 16);
  CHECK(tables[1].size() == 18);
  CHECK(tables[0].level(0) == 307200);
  CHECK(tables[0].max_level() == 1593600);
  CHECK(tables[1].level(0) == 307200);
  CHECK(tables[1].max_level() == 2150400);
  CHECK(total_levels(tables) == 34);
  for (const auto& t : tables) {
    // Integer kHz rounding moves a level by at most 1 kHz.
    const double step = static_cast<double>(t.max_level() - t.level(0)) / static_cast<double>(t.size() - 1);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(static_cast<double>(t.level(i)) - (t.level(0) + step * static_cast<double>(i))) <= 1.0);
    }
  }
}

TEST_CASE("global index stacks clusters in order") {
  const auto tables = default_tables();
  std::size_t expected = 0;
  for (std::size_t c = 0; c < tables.size(); ++c) {
    for (std::size_t i = 0; i < tables[c].size(); ++i) CHECK(global_index(c, i, tables) == expected++);
  }
  CHECK(code_of([&] { (void)global_index(2, 0, tables); }) == ErrorCode::BadCluster);
  CHECK(code_of([&] { (void)global_index(0, 16, tables); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sample validation") {
  const FrequencyTable t(0, {300, 600});
  CHECK(code_of([&] { validate_samples({}, t); }) == ErrorCode::EmptyTrace);
  const std::vector<DvfsSample> backwards{{10, 20, 300}, {5, 30, 600}};
  CHECK(code_of([&] { validate_samples(backwards, t); }) == ErrorCode::NonMonotonicTime);
  const std::vector<DvfsSample> inverted{{10, 5, 300}};
  CHECK(code_of([&] { validate_samples(inverted, t); }) == ErrorCode::NonMonotonicTime);
  const std::vector<DvfsSample> unknown{{10, 20, 450}};
  CHECK(code_of([&] { validate_samples(unknown, t); }) == ErrorCode::UnknownFrequency);
  const std::vector<DvfsSample> ok{{0, 10, 300}, {500, 560, 600}, {1000, 1060, 600}};
  CHECK_NOTHROW(validate_samples(ok, t));

  DvfsTrace trace;
  trace.clusters = {ok};
  trace.capture_duration_us = 2000;
  CHECK(code_of([&] { validate_trace(trace, default_tables()); }) == ErrorCode::BadCluster);
}

TEST_CASE("EM validation") {
  EmTrace em;
  CHECK(code_of([&] { validate_em(em); }) == ErrorCode::InvalidArgument);
  em.samples = {0.0f, 1.0f};
  em.sample_rate_hz = 100.0;
  em.duration_s = 1.0;
  CHECK(code_of([&] { validate_em(em); }) == ErrorCode::HeaderMismatch);
  em.sample_rate_hz = 2.0;
  em.duration_s = 1.0;
  CHECK_NOTHROW(validate_em(em));
}

TEST_CASE("class map orders labels lexicographically") {
  const ClassMap m({"zeta", "alpha", "mid", "alpha"});
  REQUIRE(m.size() == 3);
  CHECK(m.id_of("alpha") == 0);
  CHECK(m.id_of("mid") == 1);
  CHECK(m.id_of("zeta") == 2);
  CHECK(m.label_of(2) == "zeta");
  CHECK(m.id_or_unknown(std::string("other")) == kUnknownClass);
  CHECK(m.id_or_unknown(std::nullopt) == kUnknownClass);
  CHECK(code_of([&] { (void)m.id_of("other"); }) == ErrorCode::UnknownLabel);
}

TEST_CASE("matrix validation and row selection") {
  FeatureMatrix m;
  m.rows = Eigen::MatrixXd::Random(4, 3);
  m.labels = {0, 1, 0, 1};
  CHECK_NOTHROW(validate_matrix(m));
  const std::vector<std::size_t> pick{3, 1};
  const auto s = select_rows(m, pick);
  CHECK(s.rows.row(0) == m.rows.row(3));
  CHECK(s.labels == std::vector<int>{1, 1});

  m.labels.pop_back();
  CHECK(code_of([&] { validate_matrix(m); }) == ErrorCode::LengthMismatch);
  m.labels.push_back(1);
  m.rows(2, 2) = std::nan("");
  CHECK(code_of([&] { validate_matrix(m); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("error codes have names") {
  CHECK(to_string(ErrorCode::UnknownFrequency) == "UnknownFrequency");
  const Error e(ErrorCode::KTooLarge, "k");
  CHECK(e.code() == ErrorCode::KTooLarge);
}

TEST_CASE("rng streams are reproducible and in range") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = a.below(7);
    CHECK(k == b.below(7));
    CHECK(k < 7);
    CHECK(a.normal() == b.normal());
  }
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2, 0) != mix_seed(1, 2, 1));
  CHECK(mix_seed(9, 9, 9) == mix_seed(9, 9, 9));
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(5);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  CHECK(worker_count() >= 1);
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(50,
                               [](std::size_t i) {
                                 if (i == 17) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, [](std::size_t) { FAIL("no work expected"); });
}
