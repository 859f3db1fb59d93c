#include <gtest/gtest.h>

#include <cmath>

#include "fermiload/dissipative.hpp"
#include "fermiload/errors.hpp"

using namespace fermiload;

// Reference values from an independent arbitrary-precision evaluation.
TEST(Envelope, ReferenceValues) {
  EXPECT_DOUBLE_EQ(envelope(0.0), 1.0);
  EXPECT_NEAR(envelope(1e-3), 0.99999970000001785714, 1e-15);
  EXPECT_NEAR(envelope(0.3), 0.97314430580055815, 1e-14);
  EXPECT_NEAR(envelope(kPi), -0.60792710185402663, 1e-14);
  EXPECT_NEAR(envelope(kPi), -6.0 / (kPi * kPi), 1e-14);
  EXPECT_NEAR(envelope(5.0 * kPi), -0.024317084074161065, 1e-14);
  EXPECT_NEAR(envelope(10.0 * kPi), 0.0060792710185402663, 1e-14);
}

TEST(Envelope, SeriesJoinsClosedForm) {
  const double below = envelope(0.01 - 1e-12);
  const double above = envelope(0.01 + 1e-12);
  EXPECT_NEAR(below, above, 1e-7);
  EXPECT_NEAR(envelope(0.01), 1.0 - 0.3e-4, 1e-8);
}

TEST(Envelope, EvenFunction) {
  for (double x : {0.005, 0.7, 3.0, 40.0}) EXPECT_DOUBLE_EQ(envelope(-x), envelope(x));
}

TEST(Envelope, SincAsymptote) {
  const double xi = 50.5 * kPi;
  const double ratio = envelope(xi) * xi / (3.0 * std::sin(xi));
  EXPECT_NEAR(ratio, 0.99992054019516335, 1e-12);
  EXPECT_NEAR(ratio, 1.0, 0.02);
}

TEST(Envelope, DeepLatticeSuppressesNeighbours) {
  EXPECT_LT(std::abs(envelope(kPi * std::sqrt(25.0))), 0.05);
}

TEST(GammaMatrix, DiagonalMode) {
  LatticeSpec lat;
  lat.site_count = 5;
  const DissipationSpec spec{0.1, OffDiagonalMode::diagonal, 0.0};
  EXPECT_EQ(gamma_matrix(spec, lat), 0.1 * Eigen::MatrixXd::Identity(5, 5));
}

TEST(GammaMatrix, EnvelopeMode) {
  LatticeSpec lat;
  lat.site_count = 4;
  const auto deep = gamma_matrix({0.2, OffDiagonalMode::envelope, 100.0}, lat);
  EXPECT_EQ(deep, deep.transpose());
  for (int a = 0; a < 4; ++a) {
    EXPECT_DOUBLE_EQ(deep(a, a), 0.2);
    for (int b = 0; b < 4; ++b)
      if (a != b) EXPECT_LT(std::abs(deep(a, b)), 0.01 * 0.2);
  }
  const auto shallow = gamma_matrix({0.2, OffDiagonalMode::envelope, 1.0}, lat);
  EXPECT_NEAR(shallow(0, 1) / 0.2, -0.60792710185402663, 1e-14);
  EXPECT_NEAR(shallow(1, 3) / 0.2, envelope(2.0 * kPi), 1e-15);
}

TEST(GammaMatrix, EnvelopeConvergesToDiagonal) {
  LatticeSpec lat;
  lat.site_count = 3;
  const Eigen::MatrixXd diag = gamma_matrix({1.0, OffDiagonalMode::diagonal, 0.0}, lat);
  for (double ratio : {10.0, 100.0, 1000.0, 10000.0}) {
    const double xi = kPi * std::sqrt(ratio);
    // |F(xi)| <= 3 / xi + 6 / xi^2 + 6 / xi^3 bounds every off-diagonal entry.
    const double bound = 3.0 / xi + 6.0 / (xi * xi) + 6.0 / (xi * xi * xi);
    const double gap = (gamma_matrix({1.0, OffDiagonalMode::envelope, ratio}, lat) - diag)
                           .cwiseAbs()
                           .maxCoeff();
    EXPECT_LE(gap, bound);
  }
  EXPECT_LT((gamma_matrix({1.0, OffDiagonalMode::envelope, 1e6}, lat) - diag).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(GammaMatrix, Validation) {
  LatticeSpec lat;
  lat.site_count = 2;
  EXPECT_THROW(gamma_matrix({-0.1, OffDiagonalMode::diagonal, 0.0}, lat), SpecError);
  EXPECT_THROW(gamma_matrix({0.1, OffDiagonalMode::envelope, 0.0}, lat), SpecError);
}

TEST(PhysicalRate, PotassiumReference) {
  // Printed formula with CODATA 2022 constants. The quoted 3.6 kHz is not
  // reproduced by this expression; see the acceptance suite.
  const double rate = gamma_onsite_physical(PhysicalRateInput::potassium40());
  EXPECT_NEAR(rate / 0.37167128475122013, 1.0, 1e-12);
}

TEST(PhysicalRate, UnitSystemsAgree) {
  for (auto in : {PhysicalRateInput::potassium40(), PhysicalRateInput{3e13, 90.0, 55.0, 6.015}}) {
    const double si = gamma_onsite_physical(in);
    const double au = gamma_onsite_physical_atomic(in);
    EXPECT_NEAR(au / si, 1.0, 1e-10);
  }
}

TEST(PhysicalRate, Scalings) {
  const auto base = PhysicalRateInput::potassium40();
  const double g0 = gamma_onsite_physical(base);
  auto twice_a = base;
  twice_a.scattering_length_bohr *= 2.0;
  EXPECT_NEAR(gamma_onsite_physical(twice_a) / g0, 4.0, 4e-10);
  auto twice_n = base;
  twice_n.density_cm3 *= 2.0;
  EXPECT_NEAR(gamma_onsite_physical(twice_n) / g0, 2.0, 2e-10);
  // Gamma ~ 1 / a_0 ~ sqrt(omega).
  auto four_omega = base;
  four_omega.trap_frequency_khz *= 4.0;
  EXPECT_NEAR(gamma_onsite_physical(four_omega) / g0, 2.0, 2e-10);
}

TEST(PhysicalRate, RejectsNonPositiveInputs) {
  auto in = PhysicalRateInput::potassium40();
  in.density_cm3 = 0.0;
  EXPECT_THROW(gamma_onsite_physical(in), SpecError);
  in = PhysicalRateInput::potassium40();
  in.mass_amu = -1.0;
  EXPECT_THROW(gamma_onsite_physical_atomic(in), SpecError);
}
