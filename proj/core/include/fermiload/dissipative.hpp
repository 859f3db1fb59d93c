#pragma once

#include <Eigen/Dense>

#include "fermiload/model.hpp"

namespace fermiload {

enum class OffDiagonalMode { diagonal, envelope };

struct DissipationSpec {
  double gamma{0.0};  // on-site decay rate, code units
  OffDiagonalMode offdiag_mode{OffDiagonalMode::diagonal};
  double envelope_ratio{0.0};  // omega / omega_R, envelope mode only

  void validate() const;
};

struct PhysicalRateInput {
  double density_cm3{};         // reservoir density n_3D
  double scattering_length_bohr{};
  double trap_frequency_khz{};  // omega / 2 pi
  double mass_amu{};

  // 40K at n = 1e14 cm^-3, a_s = 174 a_B, omega / 2 pi = 100 kHz.
  static PhysicalRateInput potassium40();
  void validate() const;
};

// Gamma / 2 pi in kHz from Gamma = g^2 n m / (pi a_0 sqrt(2) hbar^2) * 2 / (3 e),
// g = 4 pi hbar^2 a_s / m. Evaluated in SI units.
double gamma_onsite_physical(const PhysicalRateInput& input);
// The same quantity evaluated in Hartree atomic units, then converted to kHz.
double gamma_onsite_physical_atomic(const PhysicalRateInput& input);

// F(xi) = 3 (2 xi cos xi + (xi^2 - 2) sin xi) / xi^3, even in xi; series near 0.
double envelope(double xi);

// Gamma_{alpha beta}: Gamma I (diagonal mode) or Gamma F(pi sqrt(ratio) |alpha - beta|).
Eigen::MatrixXd gamma_matrix(const DissipationSpec& spec, const LatticeSpec& lattice);

}  // namespace fermiload
