#pragma once

#include <Eigen/Dense>

#include "fermiload/integrator.hpp"
#include "fermiload/model.hpp"

namespace fermiload {

// Dense generator M = -i h of the single-particle Heisenberg equations at time t.
struct GeneratorMatrix {
  Eigen::MatrixXcd matrix;
  double time{};
};

// Rotating-frame single-particle Hamiltonian h(t) in the ModeLayout ordering.
// Diagonal: eps(t) - omega (band 0), eps(t) (band 1), k^2/2 (reservoir), plus
// per-site offsets on the lattice. Reservoir-lattice block: Omega(t)/2 R_{k,n} P[k][alpha].
// The lattice-lattice and reservoir-reservoir off-diagonal blocks vanish, so
// products with h cost O(M K n) instead of O(n^3).
class CoherentHamiltonian {
 public:
  CoherentHamiltonian(const ModelSpec& spec, const CouplingTable& table);

  const ModeLayout& layout() const { return layout_; }
  const DriveSchedule& drive() const { return drive_; }

  Eigen::MatrixXcd dense(double t) const;
  Eigen::MatrixXcd dense(const DriveSample& d) const;

  // Maximum absolute row sum of h (equal to that of M).
  double row_sum_norm(const DriveSample& d) const;
  // Maximum of row_sum_norm over the schedule knots in [t0, t1] and both ends.
  double max_row_sum_norm(double t0, double t1) const;

  // out = dC/dt = i (conj(h) C - C conj(h)) for the drive values d.
  void apply(const DriveSample& d, const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) const;
  void apply(double t, const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) const {
    apply(drive_(t), c, out);
  }
  // out = dW/dt = i conj(h) W for an orbital factor W of C = W W^dagger.
  void apply_orbitals(const DriveSample& d, const Eigen::MatrixXcd& w, Eigen::MatrixXcd& out) const;

  // Interaction picture with respect to the diagonal of h: W = diag(p) X with
  // p_i = exp(i theta_i), d theta_i / dt = h_ii. Then
  // dX/dt = i diag(conj p) conj(h_off) diag(p) X.
  void apply_interaction(double omega, const Eigen::VectorXcd& p, const Eigen::MatrixXcd& x,
                         Eigen::MatrixXcd& out) const;
  // theta_i(t) = integral of h_ii from t_ref to t.
  Eigen::VectorXd diagonal_phase(double t, double t_ref) const;

 private:
  // out = conj(h) y for any column count.
  void conj_h_times(const DriveSample& d, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) const;

  ModeLayout layout_;
  DriveSchedule drive_;
  double trap_frequency_;
  Eigen::VectorXd lattice_offsets_;    // 2M
  Eigen::VectorXd reservoir_energy_;   // K
  Eigen::MatrixXcd coupling_t_;        // 2M x K, transpose of the unit coupling block
  Eigen::MatrixXcd coupling_conj_;     // K x 2M, its complex conjugate
  Eigen::VectorXd lattice_abs_sum_;    // per lattice column, sum_k |V|
  Eigen::VectorXd reservoir_abs_sum_;  // per reservoir row, sum_l |V|
};

GeneratorMatrix assemble_generator(double t, const ModelSpec& spec, const CouplingTable& table);

// sin^2(Omega t / 2)
double fast_occupation_analytic(double omega, double t);

// Step size for a coherent run over [t0, t1] under the spec's integrator settings.
double coherent_step_size(const CoherentHamiltonian& h, const IntegratorSettings& settings,
                          double t0, double t1);

// Coherent runs integrate an orbital factor W of C = W W^dagger with
// dW/dt = i conj(h) W, i.e. W(t) = conj(U) W(t0) and C(t) = conj(U) C U^T.
// RK4 on W cannot push eigenvalues of C below zero.
CorrelationState evolve_coherent(const CorrelationState& state, const ModelSpec& spec, double t0,
                                 double t1);

// Integrates the mirrored problem: starting from C(t1), runs the dynamics
// backwards to t0 (negated generator on the time-mirrored schedule).
CorrelationState evolve_coherent_reversed(const CorrelationState& state, const ModelSpec& spec,
                                          double t0, double t1);

// Full trajectory from the filled Fermi sea over the whole schedule.
Trajectory simulate_coherent(const ModelSpec& spec);
Trajectory simulate_coherent(const CorrelationState& initial, const ModelSpec& spec, double t0,
                             double t1);

// Constant Omega and eps; at least 40 samples per Rabi period.
Trajectory run_fast_pulse(const ModelSpec& spec);

// Slow-regime sweep; warns when Omega_max >= omega / 5.
Trajectory run_slow_sweep(const ModelSpec& spec);

}  // namespace fermiload
