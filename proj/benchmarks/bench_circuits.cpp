#include <benchmark/benchmark.h>

#include "dhlab/circuit.hpp"
#include "dhlab/density_matrix.hpp"
#include "dhlab/experiment.hpp"

using namespace dhlab;

namespace {

void BM_NoisyW2Circuit(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto topo = Topology::chain(l);
  const auto c = build_waiting_circuit_w2(l, 20, topo, 5);
  NoiseModel nm;
  nm.p1 = 0.002;
  nm.p2 = 0.02;
  const auto rho0 = DensityMatrix(l);
  for (auto _ : state) {
    auto rho = rho0;
    run_circuit(rho, c, nm);
    benchmark::DoNotOptimize(rho);
  }
  state.counters["gates"] = static_cast<double>(c.gate_count());
}
BENCHMARK(BM_NoisyW2Circuit)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_RunProtocolW1(benchmark::State& state) {
  ProtocolConfig cfg;
  cfg.sites = 3;
  cfg.grid = {0, 4, 11};
  cfg.noise.p1 = 0.01;
  RunOptions opt;
  opt.jobs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_protocol(cfg, opt));
}
BENCHMARK(BM_RunProtocolW1)->Unit(benchmark::kMillisecond);

void BM_AnalyzeW1(benchmark::State& state) {
  ProtocolConfig cfg;
  cfg.sites = 3;
  cfg.grid = {0, 4, 21};
  cfg.noise.p1 = 0.01;
  const auto set = run_protocol(cfg);
  AnalysisOptions opt;
  opt.jobs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(analyze(set, opt));
}
BENCHMARK(BM_AnalyzeW1)->Unit(benchmark::kMillisecond);

}  // namespace
