#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dhlab/pauli.hpp"
#include "dhlab/string_features.hpp"
#include "dhlab/topology.hpp"

using namespace dhlab;

namespace {

std::vector<PauliString> random_strings(int sites, int count) {
  std::mt19937_64 rng(1);
  std::vector<PauliString> out;
  const std::uint32_t n = 1u << (2 * sites);
  for (int i = 0; i < count; ++i) out.push_back(PauliString::from_index(sites, static_cast<std::uint32_t>(rng() % n)));
  return out;
}

void BM_Multiply(benchmark::State& state) {
  const auto s = random_strings(static_cast<int>(state.range(0)), 1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(multiply(s[i & 1023], s[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Multiply)->Arg(3)->Arg(8);

void BM_Commutes(benchmark::State& state) {
  const auto s = random_strings(8, 1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(commutes(s[i & 1023], s[(i + 7) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Commutes);

void BM_ClassifyString(benchmark::State& state) {
  const auto topo = Topology::chain(8);
  const auto s = random_strings(8, 1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify_string(s[i & 1023], topo));
    ++i;
  }
}
BENCHMARK(BM_ClassifyString);

void BM_EnumerateStrings(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_strings(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_EnumerateStrings)->Arg(4)->Arg(6);

}  // namespace
