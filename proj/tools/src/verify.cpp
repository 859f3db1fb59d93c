#include "fermiload/cli/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fermiload/coherent.hpp"
#include "fermiload/dissipative.hpp"
#include "fermiload/oracle.hpp"

namespace fermiload::cli {

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

CheckResult below(std::string name, double value, double bound, std::string detail = {}) {
  return {std::move(name), std::isfinite(value) && value < bound, value, bound, std::move(detail)};
}

// 2 sites, 21 reservoir modes, eps_F = 1, n lambda/2 = 1.5.
ModelSpec small_model(DriveSchedule drive) {
  ModelSpec s;
  s.reservoir = ReservoirSpec::unit_fermi_energy(11, 21);
  s.lattice.site_count = 2;
  s.lattice.trap_frequency = 3.0;
  s.lattice.site_spacing = 1.5 / s.reservoir.density();
  s.drive = std::move(drive);
  s.integrator.samples = 11;
  return s;
}

CombinedRunSpec small_combined(double gamma) {
  CombinedRunSpec spec;
  spec.model = small_model(DriveSchedule::linear_sweep(0.0, 1.0, 60.0, 0.6, 10.0));
  spec.model.lattice.trap_frequency = 5.0;
  spec.dissipation.gamma = gamma;
  return spec;
}

// One site with its two bands and a single uncoupled reservoir mode.
CombinedRunSpec isolated_spec(double gamma, double duration) {
  CombinedRunSpec spec;
  spec.model.reservoir = ReservoirSpec::unit_fermi_energy(1, 1);
  spec.model.lattice.site_count = 1;
  spec.model.lattice.site_spacing = 1.0;
  spec.model.lattice.trap_frequency = 10.0;
  spec.model.drive = DriveSchedule::constant(0.0, 0.0, duration);
  spec.dissipation.gamma = gamma;
  return spec;
}

CorrelationState excited_site() {
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(3, 3);
  c(1, 1) = 1.0;
  return {ModeLayout{1, 1}, c};
}

double worst_hermiticity(const Trajectory& t) {
  double w = 0.0;
  for (const auto& s : t.samples) w = std::max(w, s.herm_residual);
  return w;
}

double drift_rate(const Trajectory& t) {
  const double span = t.samples.back().t - t.samples.front().t;
  return t.max_trace_drift / span;
}

}  // namespace

std::vector<CheckResult> verify_suite(FaultInjection fault) {
  std::vector<CheckResult> out;

  {
    const auto spec = small_model(DriveSchedule::linear_sweep(1.0, 0.0, 20.0, 0.9, 5.0));
    const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
    double worst = 0.0;
    for (double t : {0.0, 2.5, 10.0, 20.0}) {
      const auto m = assemble_generator(t, spec, table).matrix;
      worst = std::max(worst, max_abs(m + m.adjoint()));
    }
    out.push_back(below("coherent.generator_anti_hermitian", worst, 1e-12));
  }
  {
    auto spec = small_model(DriveSchedule(PiecewiseLinear({{0.0, 0.8}, {2.0, 0.8}, {6.0, 0.8}}),
                                          PiecewiseLinear({{0.0, 0.4}, {3.0, 0.4}, {6.0, 0.4}})));
    spec.lattice.site_offsets = {0.0, 0.3};
    spec.integrator.step_safety = 0.02;
    const auto sea = fermi_sea_init(spec.reservoir, spec.lattice);
    const auto rk = evolve_coherent(sea, spec, 0.0, 6.0);
    const auto exact = exact_piecewise_evolve(sea.matrix(), spec, 0.0, 6.0);
    out.push_back(below("oracle.coherent_vs_propagator", max_abs(rk.matrix() - exact), 1e-8,
                        "elementwise, K = 21"));
  }
  {
    const auto spec = small_model(DriveSchedule::linear_sweep(1.0, 0.0, 40.0, 0.9, 5.0));
    const auto traj = simulate_coherent(spec);
    out.push_back(below("coherent.hermiticity", worst_hermiticity(traj), 1e-10));
    out.push_back(below("coherent.trace_conservation", drift_rate(traj), 1e-8, "per unit time"));
    out.push_back(below("coherent.pauli_bounds", traj.max_pauli_violation, 1e-8));
  }
  {
    auto spec = small_combined(0.0);
    spec.model.integrator.step_safety = 0.01;
    spec.model.integrator.samples = 31;
    const auto sea = fermi_sea_init(spec.model.reservoir, spec.model.lattice);
    const auto comb = evolve_combined(sea, spec, 0.0, 60.0, fault);
    const auto coh = simulate_coherent(sea, spec.model, 0.0, 60.0);
    out.push_back(below("combined.gamma0_reduction",
                        max_abs(comb.final_state.matrix() - coh.final_state.matrix()), 1e-8));
  }
  {
    const auto traj = run_combined(small_combined(0.1), fault);
    out.push_back(below("combined.trace_conservation", drift_rate(traj), 1e-8, "per unit time"));
    out.push_back(below("combined.hermiticity", worst_hermiticity(traj), 1e-10));
    out.push_back(below("combined.pauli_flag", traj.max_pauli_violation, 1e-3,
                        traj.closure_flagged ? "flagged" : "not flagged"));
    out.push_back(below("combined.monotone_f0", traj.max_step_decrease_f0, 1e-6, "per step"));
  }
  {
    CombinedRunSpec spec;
    spec.model.reservoir = ReservoirSpec::unit_fermi_energy(2, 3);
    spec.model.lattice.site_count = 1;
    spec.model.lattice.site_spacing = 1.0;
    spec.model.lattice.trap_frequency = 1.5;
    spec.model.drive = DriveSchedule::linear_sweep(0.0, 1.5, 6.0, 1.2, 1.0);
    spec.model.integrator.step_safety = 0.01;
    spec.model.integrator.samples = 13;
    const auto sea = fermi_sea_init(spec.model.reservoir, spec.model.lattice);
    const auto rep = closure_error_report(FockConfig::full(ModeLayout::of(spec.model)), spec, sea, 6.0,
                                          {0.01, 13});
    out.push_back(below("oracle.lindblad_gamma0_vs_closed", rep.max_deviation, 1e-8, "5 modes"));
  }
  {
    const double gamma = 1.0;
    const auto rep = closure_error_report(FockConfig({0, 1}), isolated_spec(gamma, 10.0), excited_site(), 10.0);
    double gap = 0.0;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
      gap = std::max(gap, std::abs(rep.closed(static_cast<Eigen::Index>(i), 1) -
                                   1.0 / (1.0 + gamma * rep.times[i])));
    std::ostringstream detail;
    detail << "exact vs closed gap " << rep.per_mode_deviation[1];
    out.push_back(below("oracle.closure_closed_form", gap, 1e-4, detail.str()));
  }
  {
    out.push_back(below("dissipative.envelope_origin", std::abs(envelope(0.0) - 1.0), 1e-12));
    const double xi = 50.5 * kPi;
    const double ratio = envelope(xi) / (3.0 * std::sin(xi) / xi);
    out.push_back(below("dissipative.envelope_sinc_asymptote", std::abs(ratio - 1.0), 0.02,
                        "F(xi) / (3 sin xi / xi) at xi = 50.5 pi"));
  }
  {
    const auto base = PhysicalRateInput::potassium40();
    auto doubled_a = base;
    doubled_a.scattering_length_bohr *= 2.0;
    auto tripled_n = base;
    tripled_n.density_cm3 *= 3.0;
    const double g = gamma_onsite_physical(base);
    out.push_back(below("dissipative.rate_scattering_length_squared",
                        std::abs(gamma_onsite_physical(doubled_a) / g - 4.0) / 4.0, 1e-10));
    out.push_back(below("dissipative.rate_linear_in_density",
                        std::abs(gamma_onsite_physical(tripled_n) / g - 3.0) / 3.0, 1e-10));
  }
  return out;
}

std::vector<CheckResult> trajectory_checks(const RunConfig& config, const Trajectory& trajectory) {
  std::vector<CheckResult> out;
  out.push_back(below("hermiticity", worst_hermiticity(trajectory), 1e-10));
  out.push_back(below("trace_conservation", drift_rate(trajectory), 1e-8, "per unit time"));
  if (config.kind == RunKind::combined) {
    out.push_back(below("pauli_flag", trajectory.max_pauli_violation, 1e-3));
    out.push_back(below("monotone_f0", trajectory.max_step_decrease_f0, 1e-6, "per step"));
  } else {
    out.push_back(below("pauli_bounds", trajectory.max_pauli_violation, 1e-8));
  }
  return out;
}

std::string closure_table(double gamma, double horizon, int rows) {
  auto spec = isolated_spec(gamma, horizon);
  spec.model.integrator.samples = rows;
  const auto closed = evolve_combined(excited_site(), spec, 0.0, horizon);
  const auto exact = exact_lindblad_evolve(FockConfig({0, 1}), spec, excited_site(), 0.0, horizon,
                                           {0.02, rows});
  std::ostringstream out;
  out << "t,exact_exp,closed_integrated,closed_analytic,gap\n";
  char line[256];
  for (int i = 0; i < rows; ++i) {
    const double t = closed.samples[static_cast<std::size_t>(i)].t;
    const double n_exact = exact.occupations(i, 1);
    const double n_closed = closed.samples[static_cast<std::size_t>(i)].f1;
    const double analytic = 1.0 / (1.0 + gamma * t);
    std::snprintf(line, sizeof line, "%.6f,%.12f,%.12f,%.12f,%.12f\n", t, n_exact, n_closed, analytic,
                  n_closed - n_exact);
    out << line;
  }
  return out.str();
}

std::string format_checks(const std::vector<CheckResult>& checks) {
  std::ostringstream out;
  char buf[64];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%.3e (< %.1e)", c.value, c.threshold);
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ' ' << buf;
    if (!c.detail.empty()) out << ' ' << c.detail;
    out << '\n';
  }
  return out.str();
}

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace fermiload::cli
