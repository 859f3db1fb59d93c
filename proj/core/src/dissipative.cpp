#include "fermiload/dissipative.hpp"

#include <cmath>

#include "fermiload/errors.hpp"

namespace fermiload {

namespace {

// CODATA 2022.
constexpr double kHbar = 1.0545718176461565e-34;    // J s, h / 2 pi with h exact
constexpr double kAtomicMass = 1.66053906892e-27;   // kg
constexpr double kBohr = 5.29177210544e-11;         // m
constexpr double kElectronMass = 9.1093837139e-31;  // kg
constexpr double kE = 2.718281828459045;

double rate_formula(double g, double n, double m, double a0, double hbar) {
  return g * g * n * m / (kPi * a0 * std::sqrt(2.0) * hbar * hbar) * 2.0 / (3.0 * kE);
}

}  // namespace

void DissipationSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw SpecError("gamma must be >= 0");
  if (offdiag_mode == OffDiagonalMode::envelope && !(envelope_ratio > 0.0))
    throw SpecError("envelope mode requires envelope_ratio = omega/omega_R > 0");
}

PhysicalRateInput PhysicalRateInput::potassium40() { return {1e14, 174.0, 100.0, 39.96399848}; }

void PhysicalRateInput::validate() const {
  if (!(density_cm3 > 0.0) || !(scattering_length_bohr > 0.0) || !(trap_frequency_khz > 0.0) ||
      !(mass_amu > 0.0))
    throw SpecError("physical rate inputs must all be positive");
}

double gamma_onsite_physical(const PhysicalRateInput& input) {
  input.validate();
  const double m = input.mass_amu * kAtomicMass;
  const double a_s = input.scattering_length_bohr * kBohr;
  const double n = input.density_cm3 * 1e6;
  const double omega = 2.0 * kPi * input.trap_frequency_khz * 1e3;
  const double a0 = std::sqrt(kHbar / (m * omega));
  const double g = 4.0 * kPi * kHbar * kHbar * a_s / m;
  const double gamma = rate_formula(g, n, m, a0, kHbar) / kHbar;  // 1/s
  return gamma / (2.0 * kPi) / 1e3;
}

double gamma_onsite_physical_atomic(const PhysicalRateInput& input) {
  input.validate();
  // hbar = m_e = a_B = 1.
  const double hartree = kHbar * kHbar / (kElectronMass * kBohr * kBohr);
  const double time_unit = kHbar / hartree;
  const double m = input.mass_amu * (kAtomicMass / kElectronMass);
  const double a_s = input.scattering_length_bohr;
  const double bohr_cm = kBohr * 1e2;
  const double n = input.density_cm3 * bohr_cm * bohr_cm * bohr_cm;
  const double omega = 2.0 * kPi * input.trap_frequency_khz * 1e3 * time_unit;
  const double a0 = std::sqrt(1.0 / (m * omega));
  const double g = 4.0 * kPi * a_s / m;
  const double gamma = rate_formula(g, n, m, a0, 1.0);  // Hartree = 1 / time_unit
  return gamma / time_unit / (2.0 * kPi) / 1e3;
}

double envelope(double xi) {
  const double x = std::abs(xi);
  if (x < 1e-2) {
    const double x2 = x * x;
    return 1.0 - 0.3 * x2 + x2 * x2 / 56.0 - x2 * x2 * x2 / 2160.0;
  }
  return 3.0 * (2.0 * x * std::cos(x) + (x * x - 2.0) * std::sin(x)) / (x * x * x);
}

Eigen::MatrixXd gamma_matrix(const DissipationSpec& spec, const LatticeSpec& lattice) {
  spec.validate();
  const int m = lattice.site_count;
  if (spec.offdiag_mode == OffDiagonalMode::diagonal)
    return spec.gamma * Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd g(m, m);
  const double scale = kPi * std::sqrt(spec.envelope_ratio);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) g(a, b) = spec.gamma * envelope(scale * std::abs(a - b));
  return g;
}

}  // namespace fermiload
