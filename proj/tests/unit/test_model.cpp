#include <gtest/gtest.h>

#include <cmath>

#include "fermiload/errors.hpp"
#include "fermiload/model.hpp"
#include "unit/test_support.hpp"

using namespace fermiload;
using fermiload::testing::make_spec;

namespace {

LatticeSpec lattice_with_a0(double a0, int sites = 1, double spacing = 1.0) {
  LatticeSpec l;
  l.site_count = sites;
  l.site_spacing = spacing;
  l.trap_frequency = 1.0 / (a0 * a0);
  return l;
}

double sea_energy_per_particle(int particles) {
  const auto r = ReservoirSpec::unit_fermi_energy(particles, particles);
  const auto k = build_momentum_grid(r);
  double e = 0.0;
  for (double q : k) e += 0.5 * q * q;
  return e / particles;
}

}  // namespace

TEST(MomentumGrid, SmallGridOrderedByMagnitude) {
  const auto k = build_momentum_grid({1, 3, 2.0 * kPi});
  ASSERT_EQ(k.size(), 3u);
  EXPECT_DOUBLE_EQ(k[0], 0.0);
  EXPECT_DOUBLE_EQ(k[1], 1.0);
  EXPECT_DOUBLE_EQ(k[2], -1.0);
}

TEST(MomentumGrid, EvenModeCountRejected) {
  EXPECT_THROW(build_momentum_grid({2, 4, 10.0}), SpecError);
  EXPECT_THROW(ReservoirSpec({2, 4, 10.0}).validate(), SpecError);
}

TEST(MomentumGrid, FermiWavevectorFromFilledShells) {
  // N = 81 with the lattice at n_1D lambda/2 = 1.7.
  const auto spec = make_spec(81, 161, 5, 10.0, 1.7, DriveSchedule::constant(0.9, 0.0, 1.0));
  const auto& r = spec.reservoir;
  const auto k = build_momentum_grid(r);
  // Midpoint between the last filled and the first empty shell.
  const double kf = 0.5 * (std::abs(k[80]) + std::abs(k[81]));
  EXPECT_NEAR(kf, kPi * r.density(), 1e-12);
  EXPECT_NEAR(kf, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.fermi_energy(), 1.0, 1e-12);
  EXPECT_NEAR(spec.lattice.site_spacing * r.density(), 1.7, 1e-12);
}

TEST(MomentumGrid, EnergyPerParticleConvergesWithVolume) {
  const double e81 = sea_energy_per_particle(81);
  const double e161 = sea_energy_per_particle(161);
  EXPECT_NEAR(e81, 0.33328252806990816, 1e-13);
  EXPECT_NEAR(e161, 0.3333204737471549, 1e-13);
  EXPECT_LT(std::abs(e161 - 1.0 / 3.0), std::abs(e81 - 1.0 / 3.0));
}

TEST(FermiSea, LowestMagnitudeModesFilled) {
  const ReservoirSpec r{2, 5, 10.0};
  const auto c = fermi_sea_init(r, lattice_with_a0(1.0));
  ASSERT_EQ(c.layout().size(), 7);
  Eigen::VectorXd expected(7);
  expected << 0, 0, 1, 1, 0, 0, 0;
  EXPECT_EQ(c.matrix().diagonal().real(), expected);
  EXPECT_EQ((c.matrix() - Eigen::MatrixXcd(c.matrix().diagonal().asDiagonal())).norm(), 0.0);
}

TEST(FermiSea, TraceEqualsParticleCount) {
  const auto spec = make_spec(81, 161, 5, 5.0, 3.4, DriveSchedule::constant(0.45, 0.0, 1.0));
  const auto c = fermi_sea_init(spec.reservoir, spec.lattice);
  EXPECT_DOUBLE_EQ(c.total_number(), 81.0);
  EXPECT_DOUBLE_EQ(c.reservoir_number(), 81.0);
  EXPECT_DOUBLE_EQ(c.lattice_number(), 0.0);
}

TEST(Coupling, ParityAndBandRatio) {
  const auto lat = lattice_with_a0(0.7);
  const double len = 40.0;
  EXPECT_EQ(coupling_amplitude(0.0, 1, lat, len), cplx(0.0, 0.0));
  for (double k : {0.3, 1.1, 2.5}) {
    const cplx r0 = coupling_amplitude(k, 0, lat, len);
    const cplx r1 = coupling_amplitude(k, 1, lat, len);
    EXPECT_GT(r0.real(), 0.0);
    EXPECT_EQ(r0.imag(), 0.0);
    EXPECT_NEAR(std::abs(r1 / r0), std::sqrt(2.0) * 0.7 * k, 1e-13);
    EXPECT_NEAR((r1 / r0).real(), 0.0, 1e-15);
    EXPECT_EQ(coupling_amplitude(-k, 0, lat, len), r0);
    EXPECT_EQ(coupling_amplitude(-k, 1, lat, len), -r1);
  }
  EXPECT_THROW(coupling_amplitude(1.0, 2, lat, len), SpecError);
}

TEST(Coupling, ParsevalSumApproachesOne) {
  const auto lat = lattice_with_a0(1.0);
  double previous_error = 1.0;
  for (int modes : {3, 7, 15, 101}) {
    const ReservoirSpec r{1, modes, 20.0};
    const auto table = CouplingTable::build(r, lat);
    const double sum = table.amplitudes.col(0).squaredNorm();
    const double error = std::abs(sum - 1.0);
    EXPECT_LT(error, previous_error);
    previous_error = error;
  }
  EXPECT_LT(previous_error, 1e-12);
}

TEST(Coupling, TableMatchesPointwiseAmplitudes) {
  const auto spec = make_spec(11, 21, 3, 3.0, 1.5, DriveSchedule::constant(1.0, 0.0, 1.0));
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  ASSERT_EQ(table.modes(), 21);
  ASSERT_EQ(table.sites(), 3);
  for (int j = 0; j < table.modes(); ++j) {
    const double k = table.momenta[static_cast<std::size_t>(j)];
    EXPECT_EQ(table.amplitudes(j, 1),
              coupling_amplitude(k, 1, spec.lattice, spec.reservoir.box_length));
    for (int a = 0; a < 3; ++a) {
      EXPECT_NEAR(std::abs(table.phases(j, a)), 1.0, 1e-15);
      EXPECT_NEAR(std::arg(table.phases(j, a) * std::exp(cplx(0.0, k * spec.lattice.site_position(a)))),
                  0.0, 1e-12);
    }
  }
}

TEST(CollectiveModes, SameSiteGroundModeNormalised) {
  auto lat = lattice_with_a0(1.0, 3, 6.0);
  const ReservoirSpec r{1, 1001, 200.0};
  const auto table = CouplingTable::build(r, lat);
  EXPECT_NEAR(std::abs(collective_mode_overlap(1, 1, 0, 0, table) - 1.0), 0.0, 1e-3);
  EXPECT_EQ(collective_mode_overlap(1, 1, 0, 1, table), cplx(0.0, 0.0));
  EXPECT_NEAR(std::abs(collective_mode_overlap(1, 1, 1, 1, table) - 1.0), 0.0, 1e-3);
}

TEST(CollectiveModes, NeighbouringSitesNearlyOrthogonalInDeepLattice) {
  // omega / omega_R = 10 with omega_R = pi^2 / (2 d^2).
  const double d = 2.0;
  LatticeSpec lat;
  lat.site_count = 2;
  lat.site_spacing = d;
  lat.trap_frequency = 10.0 * kPi * kPi / (2.0 * d * d);
  EXPECT_NEAR(lat.trap_frequency / lat.recoil_frequency(), 10.0, 1e-12);
  const ReservoirSpec r{1, 801, 200.0};
  const auto table = CouplingTable::build(r, lat);
  EXPECT_LT(std::abs(collective_mode_overlap(0, 1, 0, 0, table)), 0.05);
}

TEST(Fidelity, EmptyAndFullLattice) {
  const ModeLayout layout{4, 3};
  auto empty = CorrelationState::empty(layout);
  EXPECT_EQ(fidelity(empty, 0), 0.0);
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(layout.size(), layout.size());
  for (int a = 0; a < 4; ++a) c(layout.lattice(a, 0), layout.lattice(a, 0)) = 1.0;
  const CorrelationState full(layout, c);
  EXPECT_DOUBLE_EQ(fidelity(full, 0), 1.0);
  EXPECT_DOUBLE_EQ(fidelity(full, 1), 0.0);
  EXPECT_THROW(fidelity(full, 2), SpecError);
}

TEST(CorrelationStateTest, DimensionMismatchRejected) {
  EXPECT_THROW(CorrelationState(ModeLayout{1, 1}, Eigen::MatrixXcd::Zero(2, 2)), SpecError);
}

TEST(CorrelationStateTest, DiagnosticsOnTwoModeState) {
  Eigen::MatrixXcd c(3, 3);
  c << 0.5, cplx(0.2, 0.1), 0.0,
       cplx(0.2, -0.1), 0.3, 0.0,
       0.0, 0.0, 1.0;
  const CorrelationState s(ModeLayout{1, 1}, c);
  EXPECT_DOUBLE_EQ(s.hermiticity_residual(), 0.0);
  EXPECT_DOUBLE_EQ(s.total_number(), 1.8);
  const auto [lo, hi] = s.eigenvalue_range();
  const double mean = 0.4, rad = std::sqrt(0.01 + 0.05);
  EXPECT_NEAR(lo, mean - rad, 1e-14);
  EXPECT_NEAR(hi, 1.0, 1e-14);
}

TEST(OrbitalFactorTest, ReconstructsCorrelation) {
  Eigen::MatrixXcd c(3, 3);
  c << 0.5, cplx(0.2, 0.1), 0.0,
       cplx(0.2, -0.1), 0.3, 0.0,
       0.0, 0.0, 1.0;
  const CorrelationState s(ModeLayout{1, 1}, c);
  const auto f = orbital_factor(s);
  EXPECT_EQ(f.weights.size(), 3);
  EXPECT_LT((f.correlation() - c).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((f.vectors.adjoint() * f.vectors - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff(),
            1e-14);

  const auto sea = fermi_sea_init({3, 5, 10.0}, lattice_with_a0(1.0));
  const auto g = orbital_factor(sea);
  EXPECT_EQ(g.weights.size(), 3);
  EXPECT_EQ(g.correlation(), sea.matrix());
}

TEST(OrbitalFactorTest, NegativeEigenvalueRejected) {
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(3, 3);
  c(0, 0) = 0.5;
  c(0, 1) = c(1, 0) = 1.0;
  EXPECT_THROW(orbital_factor(CorrelationState(ModeLayout{1, 1}, c)), SpecError);
}

TEST(ModelSpecTest, Validation) {
  auto spec = make_spec(11, 21, 2, 3.0, 1.5, DriveSchedule::constant(1.0, 0.0, 1.0));
  EXPECT_NO_THROW(spec.validate());

  auto bad = spec;
  bad.lattice.trap_frequency = -1.0;
  EXPECT_THROW(bad.validate(), SpecError);
  bad = spec;
  bad.reservoir.mode_count = 9;
  EXPECT_THROW(bad.validate(), SpecError);
  bad = spec;
  bad.lattice.site_spacing = spec.reservoir.box_length;
  EXPECT_THROW(bad.validate(), SpecError);
  bad = spec;
  bad.lattice.site_offsets = {1.0};
  EXPECT_THROW(bad.validate(), SpecError);
  bad = spec;
  bad.integrator.samples = 1;
  EXPECT_THROW(bad.validate(), SpecError);
}

TEST(ModelSpecTest, ShallowLatticeWarns) {
  auto spec = make_spec(11, 21, 2, 3.0, 1.5, DriveSchedule::constant(1.0, 0.0, 1.0));
  spec.lattice.trap_frequency = 2.0 * spec.lattice.recoil_frequency();
  EXPECT_EQ(spec.warnings().size(), 1u);
  spec.lattice.trap_frequency = 10.0 * spec.lattice.recoil_frequency();
  EXPECT_TRUE(spec.warnings().empty());
}

TEST(ModelSpecTest, SitesCentredInBox) {
  LatticeSpec lat = lattice_with_a0(1.0, 5, 2.0);
  EXPECT_DOUBLE_EQ(lat.site_position(0), -4.0);
  EXPECT_DOUBLE_EQ(lat.site_position(2), 0.0);
  EXPECT_DOUBLE_EQ(lat.site_position(4), 4.0);
}

TEST(TrajectoryTest, AppendSkipsSharedEndpoint) {
  Trajectory a, b;
  a.samples.resize(2);
  a.samples[0].t = 0.0;
  a.samples[1].t = 1.0;
  a.max_step_decrease_f0 = 1e-7;
  a.max_trace_drift = 1e-12;
  b.samples.resize(2);
  b.samples[0].t = 1.0;
  b.samples[1].t = 2.0;
  b.max_step_decrease_f0 = 2e-7;
  b.max_step_decrease_time = 1.5;
  b.max_trace_drift = 2e-12;
  b.steps = 10;
  a.append(b);
  ASSERT_EQ(a.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(a.samples.back().t, 2.0);
  EXPECT_DOUBLE_EQ(a.max_step_decrease_f0, 2e-7);
  EXPECT_DOUBLE_EQ(a.max_step_decrease_time, 1.5);
  EXPECT_DOUBLE_EQ(a.max_trace_drift, 3e-12);
  EXPECT_EQ(a.steps, 10);
}
