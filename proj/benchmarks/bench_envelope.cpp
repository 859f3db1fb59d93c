#include <benchmark/benchmark.h>

#include <vector>

#include "fermiload/dissipative.hpp"

namespace {

using namespace fermiload;

void BM_Envelope(benchmark::State& state) {
  std::vector<double> xs(1024);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = 1e-4 * static_cast<double>(i) * static_cast<double>(i);
  for (auto _ : state) {
    double acc = 0.0;
    for (double x : xs) acc += envelope(x);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(xs.size()));
}
BENCHMARK(BM_Envelope);

void BM_GammaMatrix(benchmark::State& state) {
  LatticeSpec lattice;
  lattice.site_count = static_cast<int>(state.range(0));
  lattice.trap_frequency = 10.0;
  lattice.site_spacing = 3.0;
  DissipationSpec spec{0.1, OffDiagonalMode::envelope, 10.0};
  for (auto _ : state) {
    auto g = gamma_matrix(spec, lattice);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_GammaMatrix)->Arg(5)->Arg(50);

void BM_PhysicalRate(benchmark::State& state) {
  const auto input = PhysicalRateInput::potassium40();
  for (auto _ : state) benchmark::DoNotOptimize(gamma_onsite_physical(input));
}
BENCHMARK(BM_PhysicalRate);

}  // namespace
