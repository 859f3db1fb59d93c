#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "fermiload/coherent.hpp"
#include "fermiload/combined.hpp"
#include "fermiload/model.hpp"

namespace {

using namespace fermiload;

ModelSpec make_spec(int modes) {
  ModelSpec spec;
  spec.reservoir = ReservoirSpec::unit_fermi_energy(modes / 2, modes);
  spec.lattice.site_count = 5;
  spec.lattice.trap_frequency = 10.0;
  spec.lattice.site_spacing = 1.4 / spec.reservoir.density();
  spec.drive = DriveSchedule::linear_sweep(1.0, 0.0, 100.0, 0.9, 10.0);
  return spec;
}

void BM_CoherentApply(benchmark::State& state) {
  const auto spec = make_spec(static_cast<int>(state.range(0)));
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  const CoherentHamiltonian h(spec, table);
  const auto c = fermi_sea_init(spec.reservoir, spec.lattice).matrix();
  Eigen::MatrixXcd out(c.rows(), c.cols());
  for (auto _ : state) {
    h.apply(37.0, c, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(c.rows());
}
BENCHMARK(BM_CoherentApply)->Arg(41)->Arg(81)->Arg(161)->Arg(321)->Arg(641)->Complexity();

void BM_DenseCommutator(benchmark::State& state) {
  const auto spec = make_spec(static_cast<int>(state.range(0)));
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  const CoherentHamiltonian h(spec, table);
  const Eigen::MatrixXcd hc = h.dense(37.0).conjugate();
  const auto c = fermi_sea_init(spec.reservoir, spec.lattice).matrix();
  Eigen::MatrixXcd out(c.rows(), c.cols());
  for (auto _ : state) {
    out.noalias() = cplx{0.0, 1.0} * (hc * c - c * hc);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(c.rows());
}
BENCHMARK(BM_DenseCommutator)->Arg(41)->Arg(81)->Arg(161)->Arg(321)->Arg(641)->Complexity();

void BM_OrbitalInteractionApply(benchmark::State& state) {
  const auto spec = make_spec(static_cast<int>(state.range(0)));
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  const CoherentHamiltonian h(spec, table);
  const auto orbitals = orbital_factor(fermi_sea_init(spec.reservoir, spec.lattice));
  const Eigen::VectorXd theta = h.diagonal_phase(37.0, 0.0);
  const Eigen::VectorXcd p = (cplx{0.0, 1.0} * theta.cast<cplx>()).array().exp();
  Eigen::MatrixXcd out(orbitals.vectors.rows(), orbitals.vectors.cols());
  for (auto _ : state) {
    h.apply_interaction(0.9, p, orbitals.vectors, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(orbitals.vectors.rows());
}
BENCHMARK(BM_OrbitalInteractionApply)->Arg(41)->Arg(81)->Arg(161)->Arg(321)->Arg(641)->Complexity();

void BM_CombinedApply(benchmark::State& state) {
  CombinedRunSpec spec;
  spec.model = make_spec(static_cast<int>(state.range(0)));
  spec.dissipation.gamma = 0.1;
  const auto table = CouplingTable::build(spec.model.reservoir, spec.model.lattice);
  const CombinedGenerator g(spec, table);
  const auto c = fermi_sea_init(spec.model.reservoir, spec.model.lattice).matrix();
  Eigen::MatrixXcd out(c.rows(), c.cols());
  for (auto _ : state) {
    g.apply(37.0, c, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(c.rows());
}
BENCHMARK(BM_CombinedApply)->Arg(41)->Arg(81)->Arg(161)->Arg(321)->Arg(641)->Complexity();

void BM_OrbitalFactor(benchmark::State& state) {
  const auto spec = make_spec(static_cast<int>(state.range(0)));
  const auto sea = fermi_sea_init(spec.reservoir, spec.lattice);
  // Rotate the diagonal sea by a random unitary so the eigensolver path runs.
  const int n = sea.layout().size();
  const Eigen::MatrixXcd u = Eigen::HouseholderQR<Eigen::MatrixXcd>(Eigen::MatrixXcd::Random(n, n)).householderQ();
  const CorrelationState rotated(sea.layout(), u * sea.matrix() * u.adjoint());
  for (auto _ : state) {
    auto f = orbital_factor(rotated);
    benchmark::DoNotOptimize(f.vectors.data());
  }
}
BENCHMARK(BM_OrbitalFactor)->Arg(161)->Arg(321)->Unit(benchmark::kMillisecond);

void BM_FermiSeaInit(benchmark::State& state) {
  const auto spec = make_spec(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto c = fermi_sea_init(spec.reservoir, spec.lattice);
    benchmark::DoNotOptimize(c.matrix().data());
  }
}
BENCHMARK(BM_FermiSeaInit)->Arg(161)->Arg(1281);

}  // namespace
