#include <benchmark/benchmark.h>

#include "dhlab/liouvillian.hpp"
#include "dhlab/spectral.hpp"

using namespace dhlab;

namespace {

void BM_BuildTwoBodySuperoperator(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto set = build_two_body_set(Topology::chain(l));
  const auto k = sample_kossakowski(set.size(), l, 3);
  for (auto _ : state) benchmark::DoNotOptimize(build_adjoint_superoperator(set, k));
}
BENCHMARK(BM_BuildTwoBodySuperoperator)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_SampleKossakowski(benchmark::State& state) {
  const auto set = build_two_body_set(Topology::chain(5));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_kossakowski(set.size(), 5, ++seed));
}
BENCHMARK(BM_SampleKossakowski)->Unit(benchmark::kMicrosecond);

void BM_Eigendecompose(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto set = build_two_body_set(Topology::chain(l));
  const auto lm = build_adjoint_superoperator(set, sample_kossakowski(set.size(), l, 3));
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(lm));
}
BENCHMARK(BM_Eigendecompose)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ApplyAdjointMatrixFree(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto set = build_two_body_set(Topology::chain(l));
  const AdjointOperator op(set, sample_kossakowski(set.size(), l, 3));
  const ComplexVector v = ComplexVector::Random(static_cast<Eigen::Index>(op.dim()));
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(v));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(op.dim()));
}
BENCHMARK(BM_ApplyAdjointMatrixFree)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace
