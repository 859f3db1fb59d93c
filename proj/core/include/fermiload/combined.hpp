#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fermiload/coherent.hpp"
#include "fermiload/dissipative.hpp"
#include "fermiload/model.hpp"

namespace fermiload {

// Appended after the loading schedule: eps ramps to target_epsilon, then Omega ramps to 0.
// A zero duration skips that segment.
struct RemovalStageSpec {
  bool enabled{false};
  double target_epsilon{4.0};
  double ramp_duration{0.0};
  double switch_off_duration{100.0};

  void validate(double fermi_energy) const;
};

struct CombinedRunSpec {
  ModelSpec model;
  DissipationSpec dissipation;
  RemovalStageSpec removal;

  // Loading schedule followed by the removal segments.
  DriveSchedule full_schedule() const;
  // `model` with its drive replaced by full_schedule().
  ModelSpec resolved_model() const;
  double loading_end() const { return model.drive.duration(); }

  void validate() const;
};

// Negative-test hook: flips the sign of the band-1 loss family so the
// gain and loss terms no longer cancel in the trace.
struct FaultInjection {
  bool flip_dissipative_sign{false};
};

// <c_i^dag c_j^dag c_k c_l> = C_il C_jk - C_ik C_jl on a number-conserving Gaussian state.
cplx wick_factorize(int i, int j, int k, int l, const CorrelationState& state);

// Adds the closed cooling terms for each (ground, excited) mode pair with rate gamma.
void add_dissipation(const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out, double gamma,
                     std::span<const std::pair<int, int>> pairs, FaultInjection fault = {});

// (ground, excited) mode pairs of every lattice site.
std::vector<std::pair<int, int>> site_pairs(const ModeLayout& layout);

// Coherent generator action plus Wick-closed on-site cooling.
class CombinedGenerator {
 public:
  CombinedGenerator(const CombinedRunSpec& spec, const CouplingTable& table,
                    FaultInjection fault = {});

  void apply(double t, const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) const;
  // Row-sum norm of the coherent part plus gamma, maximised over the schedule knots.
  double max_norm(double t0, double t1) const;
  const CoherentHamiltonian& hamiltonian() const { return hamiltonian_; }

 private:
  CoherentHamiltonian hamiltonian_;
  double gamma_;
  std::vector<std::pair<int, int>> pairs_;
  FaultInjection fault_;
};

Eigen::MatrixXcd combined_rhs(const CorrelationState& state, double t, const CombinedRunSpec& spec,
                              FaultInjection fault = {});

Trajectory evolve_combined(const CorrelationState& state, const CombinedRunSpec& spec, double t0,
                           double t1, FaultInjection fault = {});

// Removal segments only, starting from the state at the end of loading.
Trajectory removal_stage(const CorrelationState& state, const CombinedRunSpec& spec);

// Filled Fermi sea through loading and removal.
Trajectory run_combined(const CombinedRunSpec& spec, FaultInjection fault = {});

}  // namespace fermiload
