#include <cmath>

#include <benchmark/benchmark.h>

#include "dhlab/harmonic_inversion.hpp"

using namespace dhlab;

namespace {

TimeTrace three_mode_trace(int length) {
  TimeTrace t;
  t.dt = 0.05;
  for (int n = 0; n < length; ++n) {
    const double x = n * t.dt;
    t.values.emplace_back(0.5 * std::exp(-1.0 * x) + 0.3 * std::exp(-2.5 * x) * std::cos(4 * x) + 0.2 * std::exp(-4.0 * x),
                          0.0);
  }
  return t;
}

void BM_HarmonicInversion(benchmark::State& state) {
  const auto t = three_mode_trace(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(harmonic_inversion(t));
}
BENCHMARK(BM_HarmonicInversion)->Arg(41)->Arg(201)->Unit(benchmark::kMicrosecond);

void BM_FilterAndRefit(benchmark::State& state) {
  const auto t = three_mode_trace(41);
  const auto modes = harmonic_inversion(t).modes;
  for (auto _ : state) benchmark::DoNotOptimize(refit_amplitudes(t, filter_spurious(modes)));
}
BENCHMARK(BM_FilterAndRefit)->Unit(benchmark::kMicrosecond);

}  // namespace
