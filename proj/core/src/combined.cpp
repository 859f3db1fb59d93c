#include "fermiload/combined.hpp"

#include <sstream>
#include <stdexcept>
#include <string>

#include "fermiload/errors.hpp"

namespace fermiload {

void RemovalStageSpec::validate(double fermi_energy) const {
  if (!enabled) return;
  if (!(target_epsilon > fermi_energy))
    throw SpecError("removal target epsilon must lie above eps_F");
  if (ramp_duration < 0.0 || switch_off_duration < 0.0)
    throw SpecError("removal durations must be >= 0");
}

DriveSchedule CombinedRunSpec::full_schedule() const {
  DriveSchedule s = model.drive;
  if (!removal.enabled) return s;
  const double omega_end = s.omega().knots().back().value;
  if (removal.ramp_duration > 0.0) s = s.then(removal.ramp_duration, omega_end, removal.target_epsilon);
  if (removal.switch_off_duration > 0.0)
    s = s.then(removal.switch_off_duration, 0.0, removal.target_epsilon);
  return s;
}

ModelSpec CombinedRunSpec::resolved_model() const {
  ModelSpec m = model;
  m.drive = full_schedule();
  return m;
}

void CombinedRunSpec::validate() const {
  model.validate();
  dissipation.validate();
  removal.validate(model.reservoir.fermi_energy());
  // Closed equations exist only for the on-site rate.
  if (dissipation.offdiag_mode != OffDiagonalMode::diagonal)
    throw SpecError("combined runs support only diagonal dissipation (Gamma_ab = Gamma delta_ab)");
  if (removal.enabled) {
    const double eps_end = model.drive.epsilon().knots().back().value;
    if (removal.ramp_duration == 0.0 && eps_end != removal.target_epsilon)
      throw SpecError("removal ramp_duration = 0 requires the sweep to end at target_epsilon");
  }
}

cplx wick_factorize(int i, int j, int k, int l, const CorrelationState& state) {
  const int n = state.layout().size();
  for (int idx : {i, j, k, l})
    if (idx < 0 || idx >= n)
      throw std::out_of_range("wick_factorize: mode index " + std::to_string(idx) +
                              " outside [0, " + std::to_string(n) + ")");
  return state(i, l) * state(j, k) - state(i, k) * state(j, l);
}

std::vector<std::pair<int, int>> site_pairs(const ModeLayout& layout) {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < layout.sites; ++a) out.emplace_back(layout.lattice(a, 0), layout.lattice(a, 1));
  return out;
}

// Derived from the master equation with jump A = a_0^dag a_1:
//   d<X>/dt = Gamma/2 < A^dag [X, A] + [A^dag, X] A >,  X = c_i^dag c_j,
// followed by Wick factorization of the quartic moments. The printed
// coefficient tables carry a stray "-omega" in the reservoir-reservoir
// equation and mixed primed/unprimed momentum labels; neither survives this
// derivation. The closed band-1 loss is
//   dn_1/dt = -Gamma (n_1 (1 - n_0) + |C_01|^2),
// with the coherence entering with a minus sign, and dn_0/dt is its mirror,
// so the trace is conserved exactly.
void add_dissipation(const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out, double gamma,
                     std::span<const std::pair<int, int>> pairs, FaultInjection fault) {
  if (gamma == 0.0) return;
  const double g = 0.5 * gamma;
  const double loss_sign = fault.flip_dissipative_sign ? -1.0 : 1.0;
  const Eigen::Index n = c.rows();
  Eigen::VectorXcd gain(n), loss(n);
  for (const auto& [p0, p1] : pairs) {
    const cplx c00 = c(p0, p0);
    const cplx c11 = c(p1, p1);
    const cplx c10 = c(p1, p0);
    const cplx c01 = c(p0, p1);
    // Column p0: g (delta_{i p0} n_1 - C_11 C_{i0} + C_10 C_{i1}).
    gain = g * (c10 * c.col(p1) - c11 * c.col(p0));
    gain(p0) += g * c11;
    // Column p1: -g (C_{i1} (1 - C_00) + C_{i0} C_01).
    loss = -loss_sign * g * ((1.0 - c00) * c.col(p1) + c01 * c.col(p0));
    out.col(p0) += gain;
    out.row(p0) += gain.adjoint();
    out.col(p1) += loss;
    out.row(p1) += loss.adjoint();
  }
}

CombinedGenerator::CombinedGenerator(const CombinedRunSpec& spec, const CouplingTable& table,
                                     FaultInjection fault)
    : hamiltonian_(spec.resolved_model(), table),
      gamma_(spec.dissipation.gamma),
      pairs_(site_pairs(ModeLayout::of(spec.model))),
      fault_(fault) {}

void CombinedGenerator::apply(double t, const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) const {
  hamiltonian_.apply(t, c, out);
  add_dissipation(c, out, gamma_, pairs_, fault_);
}

double CombinedGenerator::max_norm(double t0, double t1) const {
  return hamiltonian_.max_row_sum_norm(t0, t1) + gamma_;
}

Eigen::MatrixXcd combined_rhs(const CorrelationState& state, double t, const CombinedRunSpec& spec,
                              FaultInjection fault) {
  spec.validate();
  if (!(state.layout() == ModeLayout::of(spec.model)))
    throw SpecError("state layout does not match the model spec");
  const auto table = CouplingTable::build(spec.model.reservoir, spec.model.lattice);
  const CombinedGenerator gen(spec, table, fault);
  Eigen::MatrixXcd out;
  gen.apply(t, state.matrix(), out);
  if (!out.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite derivative at t = " << t;
    throw NumericalError(msg.str());
  }
  return out;
}

Trajectory evolve_combined(const CorrelationState& state, const CombinedRunSpec& spec, double t0,
                           double t1, FaultInjection fault) {
  spec.validate();
  const ModelSpec model = spec.resolved_model();
  if (!(state.layout() == ModeLayout::of(model)))
    throw SpecError("state layout does not match the model spec");
  if (!(t1 > t0)) throw SpecError("evolution requires t1 > t0");
  (void)model.drive(t0);
  (void)model.drive(t1);

  const auto table = CouplingTable::build(model.reservoir, model.lattice);
  const CombinedGenerator gen(spec, table, fault);

  IntegrationPlan plan;
  plan.t0 = t0;
  plan.t1 = t1;
  plan.dt_max = step_size(model.integrator, gen.max_norm(t0, t1), t1 - t0);
  plan.breakpoints = model.drive.breakpoints();
  plan.samples = model.integrator.samples;
  plan.eigen_diagnostics = model.integrator.eigen_diagnostics;

  auto rhs = [&gen](double t, const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) {
    gen.apply(t, c, out);
  };
  auto traj = integrate_rk4(state, plan, rhs);

  auto w = model.warnings();
  const double omega_max = model.drive.omega().max_value();
  if (omega_max >= model.lattice.trap_frequency / 5.0) {
    std::ostringstream msg;
    msg << "not in the slow regime: Omega_max = " << omega_max << " >= omega / 5";
    w.push_back(msg.str());
  }
  traj.warnings.insert(traj.warnings.begin(), w.begin(), w.end());
  return traj;
}

Trajectory removal_stage(const CorrelationState& state, const CombinedRunSpec& spec) {
  if (!spec.removal.enabled) throw SpecError("removal stage is disabled in this spec");
  const double t0 = spec.loading_end();
  const double t1 = spec.full_schedule().duration();
  if (!(t1 > t0)) throw SpecError("removal stage has zero duration");
  return evolve_combined(state, spec, t0, t1);
}

Trajectory run_combined(const CombinedRunSpec& spec, FaultInjection fault) {
  spec.validate();
  const auto initial = fermi_sea_init(spec.model.reservoir, spec.model.lattice);
  return evolve_combined(initial, spec, 0.0, spec.full_schedule().duration(), fault);
}

}  // namespace fermiload
