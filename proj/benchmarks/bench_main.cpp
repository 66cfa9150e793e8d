#include <complex>
#include <vector>

#include <benchmark/benchmark.h>

#include "freqprint/features.hpp"
#include "freqprint/fft.hpp"
#include "freqprint/governor.hpp"
#include "freqprint/ml.hpp"
#include "freqprint/rng.hpp"

namespace {

using namespace freqprint;

FeatureMatrix random_rows(std::size_t n, std::size_t d, int classes, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < m.rows.rows(); ++r) {
    const int c = static_cast<int>(r) % classes;
    for (Eigen::Index j = 0; j < m.rows.cols(); ++j) m.rows(r, j) = rng.normal() + (j % classes == c ? 2.0 : 0.0);
    m.labels.push_back(c);
  }
  return m;
}

void BM_Fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<std::complex<double>> base(n);
  for (auto& v : base) v = {rng.normal(), 0.0};
  for (auto _ : state) {
    auto data = base;
    fft_inplace(data);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(64, 16384);

// One 10 s cluster series at 0.5 ms, 100 windows of 100 ms.
void BM_WindowedSpectrum(benchmark::State& state) {
  const auto plan = make_window_plan(100.0, 100, 500.0);
  Rng rng(2);
  UniformSeries s;
  s.dt_us = 500.0;
  s.values.resize(plan.covered_samples());
  for (auto& v : s.values) v = static_cast<double>(rng.below(18));
  for (auto _ : state) benchmark::DoNotOptimize(windowed_spectrum(s, plan));
}
BENCHMARK(BM_WindowedSpectrum)->Unit(benchmark::kMicrosecond);

void BM_WindowedPcaFit(benchmark::State& state) {
  const WindowLayout layout{2, static_cast<std::size_t>(state.range(0)), 129};
  const auto m = random_rows(660, layout.total_width(), 22, 3);
  const PcaOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(fit_windowed_pca(m, layout, opts));
}
BENCHMARK(BM_WindowedPcaFit)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_RandomForestTrain(benchmark::State& state) {
  const auto m = random_rows(660, 660, 22, 4);
  ForestParams p;
  p.n_estimators = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_rf(m, p));
}
BENCHMARK(BM_RandomForestTrain)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_KnnPredict(benchmark::State& state) {
  const auto train = random_rows(660, 660, 22, 5);
  const auto test = random_rows(220, 660, 22, 6);
  const auto model = train_knn(train, 5);
  for (auto _ : state) benchmark::DoNotOptimize(predict(model, test.rows));
}
BENCHMARK(BM_KnnPredict)->Unit(benchmark::kMillisecond);

void BM_SimulateGovernor(benchmark::State& state) {
  const auto tables = default_tables();
  const auto profile = builtin_profiles()[static_cast<std::size_t>(state.range(0))];
  SimulationOptions options;
  options.background_noise = 0.05;
  options.duration_jitter = 0.3;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_governor(profile, {}, tables, 10.0, seed++, options));
}
BENCHMARK(BM_SimulateGovernor)->Arg(0)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
