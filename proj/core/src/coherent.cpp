#include "fermiload/coherent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fermiload/errors.hpp"

namespace fermiload {

CoherentHamiltonian::CoherentHamiltonian(const ModelSpec& spec, const CouplingTable& table)
    : layout_(ModeLayout::of(spec)),
      drive_(spec.drive),
      trap_frequency_(spec.lattice.trap_frequency) {
  const int m = layout_.sites;
  const int k = layout_.reservoir_modes;
  if (table.modes() != k || table.sites() != m)
    throw SpecError("coupling table does not match the model dimensions");

  lattice_offsets_.resize(2 * m);
  for (int a = 0; a < m; ++a) {
    lattice_offsets_(layout_.lattice(a, 0)) = spec.lattice.offset(a);
    lattice_offsets_(layout_.lattice(a, 1)) = spec.lattice.offset(a);
  }
  reservoir_energy_.resize(k);
  for (int j = 0; j < k; ++j) {
    const double q = table.momenta[static_cast<std::size_t>(j)];
    reservoir_energy_(j) = 0.5 * q * q;
  }

  Eigen::MatrixXcd unit(k, 2 * m);
  for (int j = 0; j < k; ++j)
    for (int a = 0; a < m; ++a)
      for (int n = 0; n < 2; ++n)
        unit(j, layout_.lattice(a, n)) = 0.5 * table.amplitudes(j, n) * table.phases(j, a);
  coupling_t_ = unit.transpose();
  coupling_conj_ = unit.conjugate();
  lattice_abs_sum_ = unit.cwiseAbs().colwise().sum().transpose();
  reservoir_abs_sum_ = unit.cwiseAbs().rowwise().sum();
}

Eigen::MatrixXcd CoherentHamiltonian::dense(double t) const { return dense(drive_(t)); }

Eigen::MatrixXcd CoherentHamiltonian::dense(const DriveSample& d) const {
  const int l = layout_.lattice_modes();
  const int k = layout_.reservoir_modes;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(layout_.size(), layout_.size());
  for (int a = 0; a < layout_.sites; ++a) {
    h(layout_.lattice(a, 0), layout_.lattice(a, 0)) =
        d.epsilon - trap_frequency_ + lattice_offsets_(layout_.lattice(a, 0));
    h(layout_.lattice(a, 1), layout_.lattice(a, 1)) =
        d.epsilon + lattice_offsets_(layout_.lattice(a, 1));
  }
  for (int j = 0; j < k; ++j) h(l + j, l + j) = reservoir_energy_(j);
  // coupling_conj_ = conj(V), so V = conj(coupling_conj_) and V^dagger = coupling_t_.conjugate().
  h.bottomLeftCorner(k, l) = d.omega * coupling_conj_.conjugate();
  h.topRightCorner(l, k) = d.omega * coupling_t_.conjugate();
  return h;
}

double CoherentHamiltonian::row_sum_norm(const DriveSample& d) const {
  double best = 0.0;
  for (int a = 0; a < layout_.sites; ++a) {
    for (int n = 0; n < 2; ++n) {
      const int i = layout_.lattice(a, n);
      const double diag = d.epsilon - (n == 0 ? trap_frequency_ : 0.0) + lattice_offsets_(i);
      best = std::max(best, std::abs(diag) + d.omega * lattice_abs_sum_(i));
    }
  }
  for (int j = 0; j < layout_.reservoir_modes; ++j)
    best = std::max(best, reservoir_energy_(j) + d.omega * reservoir_abs_sum_(j));
  return best;
}

double CoherentHamiltonian::max_row_sum_norm(double t0, double t1) const {
  double best = std::max(row_sum_norm(drive_(t0)), row_sum_norm(drive_(t1)));
  for (double b : drive_.breakpoints())
    if (b > t0 && b < t1) best = std::max(best, row_sum_norm(drive_(b)));
  return best;
}

void CoherentHamiltonian::conj_h_times(const DriveSample& d, const Eigen::MatrixXcd& y,
                                       Eigen::MatrixXcd& out) const {
  const int l = layout_.lattice_modes();
  const int k = layout_.reservoir_modes;
  out.resize(y.rows(), y.cols());
  out.topRows(l).noalias() = d.omega * (coupling_t_ * y.bottomRows(k));
  out.bottomRows(k).noalias() = d.omega * (coupling_conj_ * y.topRows(l));
  for (int i = 0; i < l; ++i) {
    const double band_shift = i < layout_.sites ? trap_frequency_ : 0.0;
    out.row(i) += (d.epsilon - band_shift + lattice_offsets_(i)) * y.row(i);
  }
  out.bottomRows(k) += reservoir_energy_.asDiagonal() * y.bottomRows(k);
}

void CoherentHamiltonian::apply(const DriveSample& d, const Eigen::MatrixXcd& c,
                                Eigen::MatrixXcd& out) const {
  conj_h_times(d, c, out);
  // dC/dt = i (P - P^dagger) with P = conj(h) C, in place.
  const cplx iu{0.0, 1.0};
  const Eigen::Index n = c.rows();
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index row = 0; row < col; ++row) {
      const cplx p = out(row, col);
      const cplx q = out(col, row);
      out(row, col) = iu * (p - std::conj(q));
      out(col, row) = iu * (q - std::conj(p));
    }
    out(col, col) = cplx{-2.0 * out(col, col).imag(), 0.0};
  }
}

void CoherentHamiltonian::apply_orbitals(const DriveSample& d, const Eigen::MatrixXcd& w,
                                         Eigen::MatrixXcd& out) const {
  conj_h_times(d, w, out);
  out *= cplx{0.0, 1.0};
}

void CoherentHamiltonian::apply_interaction(double omega, const Eigen::VectorXcd& p,
                                            const Eigen::MatrixXcd& x,
                                            Eigen::MatrixXcd& out) const {
  const int l = layout_.lattice_modes();
  const int k = layout_.reservoir_modes;
  out.resize(x.rows(), x.cols());
  const cplx iw{0.0, omega};
  out.topRows(l).noalias() =
      coupling_t_ * (p.tail(k).asDiagonal() * x.bottomRows(k));
  out.bottomRows(k).noalias() =
      coupling_conj_ * (p.head(l).asDiagonal() * x.topRows(l));
  out = iw * (p.conjugate().asDiagonal() * out);
}

Eigen::VectorXd CoherentHamiltonian::diagonal_phase(double t, double t_ref) const {
  const int l = layout_.lattice_modes();
  const double dt = t - t_ref;
  const double eps_area = drive_.epsilon().integral(t) - drive_.epsilon().integral(t_ref);
  Eigen::VectorXd theta(layout_.size());
  for (int i = 0; i < l; ++i) {
    const double fixed = lattice_offsets_(i) - (i < layout_.sites ? trap_frequency_ : 0.0);
    theta(i) = eps_area + fixed * dt;
  }
  theta.tail(layout_.reservoir_modes) = reservoir_energy_ * dt;
  return theta;
}

GeneratorMatrix assemble_generator(double t, const ModelSpec& spec, const CouplingTable& table) {
  const CoherentHamiltonian h(spec, table);
  return {cplx{0.0, -1.0} * h.dense(t), t};
}

double fast_occupation_analytic(double omega, double t) {
  if (omega < 0.0) throw SpecError("Rabi amplitude must be >= 0");
  const double s = std::sin(0.5 * omega * t);
  return s * s;
}

double coherent_step_size(const CoherentHamiltonian& h, const IntegratorSettings& settings,
                          double t0, double t1) {
  return step_size(settings, h.max_row_sum_norm(t0, t1), t1 - t0);
}

namespace {

void check_state(const CorrelationState& state, const ModelSpec& spec) {
  if (!(state.layout() == ModeLayout::of(spec)))
    throw SpecError("state layout does not match the model spec");
}

void check_interval(const ModelSpec& spec, double t0, double t1) {
  if (!(t1 > t0)) throw SpecError("evolution requires t1 > t0");
  // Throws when either end lies outside the schedule.
  (void)spec.drive(t0);
  (void)spec.drive(t1);
}

}  // namespace

namespace {

Eigen::VectorXcd unit_phases(const Eigen::VectorXd& theta) {
  return theta.unaryExpr([](double x) { return std::polar(1.0, x); });
}

// Interaction-picture integration of the orbitals over [t0, t1]. With
// `reversed`, runs the negated generator on the mirrored schedule.
struct OrbitalRun {
  const CoherentHamiltonian& h;
  double t0;
  double t1;
  bool reversed{false};

  double physical(double s) const { return reversed ? t0 + t1 - s : s; }

  Eigen::VectorXd theta(double s) const {
    // Forward: integral of h_ii over [t0, s]. Reversed: minus that over [t0 + t1 - s, t1].
    return reversed ? Eigen::VectorXd(-h.diagonal_phase(t1, physical(s)))
                    : h.diagonal_phase(s, t0);
  }

  MatrixRhs rhs() const {
    return [this](double s, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) {
      const double omega = h.drive().omega()(physical(s));
      h.apply_interaction(omega, unit_phases(theta(s)), x, out);
      if (reversed) out = -out;
    };
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (double b : h.drive().breakpoints()) out.push_back(physical(b));
    std::sort(out.begin(), out.end());
    return out;
  }

  // Back to the lab frame at the end of the run.
  Eigen::MatrixXcd lab(const Eigen::MatrixXcd& x) const {
    return unit_phases(theta(t1)).asDiagonal() * x;
  }
};

}  // namespace

CorrelationState evolve_coherent(const CorrelationState& state, const ModelSpec& spec, double t0,
                                 double t1) {
  spec.validate();
  check_state(state, spec);
  check_interval(spec, t0, t1);
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  const CoherentHamiltonian h(spec, table);
  const OrbitalRun run{h, t0, t1};
  const double dt = coherent_step_size(h, spec.integrator, t0, t1);
  const auto f = orbital_factor(state);
  const OrbitalFactor out{run.lab(integrate_rk4_matrix(f.vectors, t0, t1, dt, run.breakpoints(),
                                                       run.rhs(), PostStep::orthonormal)),
                          f.weights};
  return {state.layout(), out.correlation()};
}

CorrelationState evolve_coherent_reversed(const CorrelationState& state, const ModelSpec& spec,
                                          double t0, double t1) {
  spec.validate();
  check_state(state, spec);
  check_interval(spec, t0, t1);
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  const CoherentHamiltonian h(spec, table);
  const OrbitalRun run{h, t0, t1, true};
  const double dt = coherent_step_size(h, spec.integrator, t0, t1);
  const auto f = orbital_factor(state);
  const OrbitalFactor out{run.lab(integrate_rk4_matrix(f.vectors, t0, t1, dt, run.breakpoints(),
                                                       run.rhs(), PostStep::orthonormal)),
                          f.weights};
  return {state.layout(), out.correlation()};
}

Trajectory simulate_coherent(const CorrelationState& initial, const ModelSpec& spec, double t0,
                             double t1) {
  spec.validate();
  check_state(initial, spec);
  check_interval(spec, t0, t1);
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  const CoherentHamiltonian h(spec, table);
  const OrbitalRun run{h, t0, t1};

  IntegrationPlan plan;
  plan.t0 = t0;
  plan.t1 = t1;
  plan.dt_max = coherent_step_size(h, spec.integrator, t0, t1);
  plan.breakpoints = spec.drive.breakpoints();
  plan.samples = spec.integrator.samples;
  plan.eigen_diagnostics = spec.integrator.eigen_diagnostics;

  auto traj = integrate_rk4_orbitals(orbital_factor(initial), initial.layout(), plan, run.rhs());
  // Diagonal phases do not touch the sampled observables; only the stored
  // final matrix needs the lab frame.
  const Eigen::VectorXcd p = unit_phases(run.theta(t1));
  traj.final_state = CorrelationState(
      initial.layout(), p.asDiagonal() * traj.final_state.matrix() * p.conjugate().asDiagonal());
  auto w = spec.warnings();
  traj.warnings.insert(traj.warnings.begin(), w.begin(), w.end());
  return traj;
}

Trajectory simulate_coherent(const ModelSpec& spec) {
  return simulate_coherent(fermi_sea_init(spec.reservoir, spec.lattice), spec, 0.0,
                           spec.drive.duration());
}

Trajectory run_fast_pulse(const ModelSpec& spec) {
  spec.validate();
  const auto& drive = spec.drive;
  if (!drive.omega().is_constant() || !drive.epsilon().is_constant())
    throw SpecError("fast pulse needs constant Omega and eps");
  const double omega = drive.omega().max_value();
  if (!(omega > 0.0)) throw SpecError("fast pulse needs Omega > 0");
  if (drive.duration() < kPi / omega * (1.0 - 1e-12))
    throw SpecError("fast pulse duration must be at least pi / Omega");

  ModelSpec resolved = spec;
  const double periods = drive.duration() * omega / (2.0 * kPi);
  const int needed = static_cast<int>(std::ceil(40.0 * periods)) + 1;
  resolved.integrator.samples = std::max(resolved.integrator.samples, needed);

  auto traj = simulate_coherent(resolved);
  const double scale = std::max(spec.lattice.trap_frequency, spec.reservoir.fermi_energy());
  if (omega < 5.0 * scale) {
    std::ostringstream msg;
    msg << "not in the fast regime: Omega = " << omega << " is not >> max(omega, eps_F) = "
        << scale;
    traj.warnings.push_back(msg.str());
  }
  return traj;
}

Trajectory run_slow_sweep(const ModelSpec& spec) {
  auto traj = simulate_coherent(spec);
  const double omega_max = spec.drive.omega().max_value();
  if (omega_max >= spec.lattice.trap_frequency / 5.0) {
    std::ostringstream msg;
    msg << "not in the slow regime: Omega_max = " << omega_max << " >= omega / 5 = "
        << spec.lattice.trap_frequency / 5.0;
    traj.warnings.push_back(msg.str());
  }
  return traj;
}

}  // namespace fermiload
