#pragma once

// Domain model for a 1D, two-band lattice coupled to a spinless Fermi reservoir.
//
// Code units: hbar = m = 1 and energies in units of the reservoir Fermi energy
// (so k_F = sqrt(2) for a reservoir built with ReservoirSpec::unit_fermi_energy).
// Times are in units of 1/eps_F.

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fermiload/schedule.hpp"

namespace fermiload {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

struct ReservoirSpec {
  int particle_count{};
  int mode_count{};
  double box_length{};

  // Box length chosen so that the filled sea has eps_F = 1, i.e. L = pi N / sqrt(2).
  static ReservoirSpec unit_fermi_energy(int particles, int modes);

  double density() const { return particle_count / box_length; }
  double fermi_wavevector() const { return kPi * density(); }
  double fermi_energy() const {
    const double kf = fermi_wavevector();
    return 0.5 * kf * kf;
  }

  void validate() const;
};

struct LatticeSpec {
  static constexpr int band_count = 2;

  int site_count{};
  double site_spacing{};    // lambda / 2
  double trap_frequency{};  // omega, the band separation
  std::vector<double> site_offsets;  // per-site energy shifts; empty means all zero

  double oscillator_length() const;  // a_0 = 1 / sqrt(m omega)
  double recoil_frequency() const;   // omega_R = 2 pi^2 / (m lambda^2)
  double site_position(int site) const;
  double offset(int site) const;

  void validate() const;
};

// Step rule: dt = dt_scale * min(step_safety / ||M||_rowsum, T / min_steps),
// with ||M|| maximised over the schedule breakpoints.
struct IntegratorSettings {
  double step_safety{0.5};
  int min_steps{4000};
  double dt_scale{1.0};
  int samples{400};
  bool eigen_diagnostics{true};  // false: eigenvalue bounds only at the final sample

  void validate() const;
};

struct ModelSpec {
  ReservoirSpec reservoir;
  LatticeSpec lattice;
  DriveSchedule drive;
  IntegratorSettings integrator;

  // Checks every invariant, including that the lattice fits in the box.
  void validate() const;
  // Regime warnings that do not invalidate the spec (shallow lattice, etc.).
  std::vector<std::string> warnings() const;
};

// Ordering [a_{0,0}..a_{M-1,0}, a_{0,1}..a_{M-1,1}, b_{k_1}..b_{k_K}].
struct ModeLayout {
  int sites{};
  int reservoir_modes{};

  int size() const { return 2 * sites + reservoir_modes; }
  int lattice_modes() const { return 2 * sites; }
  int lattice(int site, int band) const { return band * sites + site; }
  int reservoir(int j) const { return 2 * sites + j; }

  static ModeLayout of(const ModelSpec& spec) {
    return {spec.lattice.site_count, spec.reservoir.mode_count};
  }
  friend bool operator==(const ModeLayout&, const ModeLayout&) = default;
};

// Momenta k_j = 2 pi j / L, j in [-(K-1)/2, (K-1)/2], ordered by |k| and then
// positive before negative.
std::vector<double> build_momentum_grid(const ReservoirSpec& reservoir);

// Harmonic-oscillator Raman coupling for band 0 or 1 in 1D.
cplx coupling_amplitude(double k, int band, const LatticeSpec& lattice, double box_length);

struct CouplingTable {
  std::vector<double> momenta;
  Eigen::MatrixX2cd amplitudes;  // K x 2, R[k][n]
  Eigen::MatrixXcd phases;       // K x M, exp(-i k x_alpha)

  static CouplingTable build(const ReservoirSpec& reservoir, const LatticeSpec& lattice);
  int modes() const { return static_cast<int>(momenta.size()); }
  int sites() const { return static_cast<int>(phases.cols()); }
};

// Hermitian single-particle correlation matrix C_ij = <c_i^dagger c_j>.
class CorrelationState {
 public:
  CorrelationState() = default;
  CorrelationState(ModeLayout layout, Eigen::MatrixXcd matrix);

  static CorrelationState empty(ModeLayout layout);

  const ModeLayout& layout() const { return layout_; }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  cplx operator()(int i, int j) const { return matrix_(i, j); }

  double occupation(int mode) const { return matrix_(mode, mode).real(); }
  double total_number() const { return matrix_.trace().real(); }
  double lattice_number() const;
  double reservoir_number() const;
  double hermiticity_residual() const;
  std::pair<double, double> eigenvalue_range() const;

 private:
  ModeLayout layout_{};
  Eigen::MatrixXcd matrix_;
};

// Filled Fermi sea: the N smallest-|k| reservoir modes occupied, lattice empty.
CorrelationState fermi_sea_init(const ReservoirSpec& reservoir, const LatticeSpec& lattice);

// C = Y diag(w) Y^dagger with orthonormal columns Y and weights w in (0, 1].
struct OrbitalFactor {
  Eigen::MatrixXcd vectors;
  Eigen::VectorXd weights;

  Eigen::MatrixXcd correlation() const;
};

// One column per nonzero eigenvalue of C. Diagonal C is factored without an
// eigensolver. Throws SpecError if C is not positive semidefinite within 1e-10.
OrbitalFactor orbital_factor(const CorrelationState& state);

// Mean occupation of `band` across lattice sites.
double fidelity(const CorrelationState& state, int band);

// sum_k R*_{k,n} R_{k,m} exp(i k (x_alpha - x_beta)).
cplx collective_mode_overlap(int alpha, int beta, int n, int m, const CouplingTable& table);

struct TrajectorySample {
  double t{};
  double f0{};
  double f1{};
  std::vector<double> site_band0;
  std::vector<double> site_band1;
  double reservoir_number{};
  double total_number{};
  double herm_residual{};
  // NaN when eigen diagnostics are disabled for this sample.
  double min_eig{};
  double max_eig{};
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  CorrelationState final_state;
  std::vector<std::string> warnings;

  long steps{0};
  double dt_max{0.0};
  // Largest eigenvalue excursion outside [0, 1] seen at any sample.
  double max_pauli_violation{0.0};
  // Largest drop of F_0 between consecutive integrator steps.
  double max_step_decrease_f0{0.0};
  double max_step_decrease_time{0.0};  // end time of that step
  // Largest |trace C(t) - trace C(t0)| over all steps.
  double max_trace_drift{0.0};
  // Orbital runs: largest |Y^dagger Y - I| entry removed by re-orthonormalisation.
  double max_gram_defect{0.0};
  bool closure_flagged{false};

  const TrajectorySample& back() const { return samples.back(); }
  // Concatenates a later trajectory; the shared endpoint sample is not duplicated.
  void append(const Trajectory& later);
};

TrajectorySample observe(const CorrelationState& state, double t, bool with_eigenvalues);

}  // namespace fermiload
