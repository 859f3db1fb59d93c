#include "fermiload/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fermiload/errors.hpp"

namespace fermiload {

namespace {

struct Rk4Workspace {
  Eigen::MatrixXcd k1, k2, k3, k4, tmp, gram;
  double last_defect{0.0};

  void step(Eigen::MatrixXcd& y, double t, double h, const MatrixRhs& rhs, PostStep post) {
    rhs(t, y, k1);
    tmp.noalias() = y + (0.5 * h) * k1;
    rhs(t + 0.5 * h, tmp, k2);
    tmp.noalias() = y + (0.5 * h) * k2;
    rhs(t + 0.5 * h, tmp, k3);
    tmp.noalias() = y + h * k3;
    rhs(t + h, tmp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    switch (post) {
      case PostStep::none:
        break;
      case PostStep::hermitian:
        tmp = y.adjoint();
        y = 0.5 * (y + tmp);
        break;
      case PostStep::orthonormal:
        gram.noalias() = y.adjoint() * y;
        gram.diagonal().array() -= 1.0;
        last_defect = gram.size() ? gram.cwiseAbs().maxCoeff() : 0.0;
        tmp.noalias() = y * gram;
        y -= 0.5 * tmp;
        break;
    }
    if (!y.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state after RK4 step at t = " << t + h << " (dt = " << h << ")";
      throw NumericalError(msg.str());
    }
  }
};

long step_count(double len, double dt_max) {
  return std::max(1L, static_cast<long>(std::ceil(len / dt_max - 1e-9)));
}

// Observables either on C directly or on (Y, w) with C = Y diag(w) Y^dagger.
struct StateView {
  const ModeLayout& layout;
  const Eigen::VectorXd* weights;  // null for correlation form

  double band0_mean(const Eigen::MatrixXcd& y) const {
    double s = 0.0;
    for (int a = 0; a < layout.sites; ++a)
      s += weights ? (y.row(a).cwiseAbs2().transpose().array() * weights->array()).sum()
                   : y(a, a).real();
    return s / layout.sites;
  }

  double trace(const Eigen::MatrixXcd& y) const {
    if (!weights) return y.trace().real();
    return (y.colwise().squaredNorm().transpose().array() * weights->array()).sum();
  }

  Eigen::MatrixXcd correlation(const Eigen::MatrixXcd& y) const {
    if (!weights) return y;
    return y * weights->cast<cplx>().asDiagonal() * y.adjoint();
  }

  TrajectorySample sample(const Eigen::MatrixXcd& y, double t, bool eig) const {
    if (!weights) return observe(CorrelationState(layout, y), t, eig);
    auto s = observe(CorrelationState(layout, correlation(y)), t, false);
    if (eig) {
      // Nonzero spectrum of Y w Y^dagger equals that of sqrt(w) Y^dagger Y sqrt(w).
      const Eigen::VectorXcd sw = weights->cwiseSqrt().cast<cplx>();
      const Eigen::MatrixXcd g = sw.asDiagonal() * (y.adjoint() * y) * sw.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      s.min_eig = ev.size() ? ev.minCoeff() : 0.0;
      s.max_eig = ev.size() ? ev.maxCoeff() : 0.0;
      if (y.cols() < y.rows()) {
        s.min_eig = std::min(s.min_eig, 0.0);
        s.max_eig = std::max(s.max_eig, 0.0);
      }
    }
    return s;
  }
};

Trajectory run_plan(Eigen::MatrixXcd y, const StateView& view, const IntegrationPlan& plan,
                    const MatrixRhs& rhs, PostStep post) {
  if (!(plan.t1 > plan.t0)) throw SpecError("integration requires t1 > t0");
  if (!(plan.dt_max > 0.0) || !std::isfinite(plan.dt_max))
    throw NumericalError("step-size rule produced a non-positive or non-finite dt");

  const auto times = sample_times(plan.t0, plan.t1, plan.samples, plan.breakpoints);

  Trajectory traj;
  traj.dt_max = plan.dt_max;
  Rk4Workspace ws;

  const double trace0 = view.trace(y);
  double f0_prev = view.band0_mean(y);

  auto record = [&](double t, bool last) {
    const bool eig = plan.eigen_diagnostics || last;
    traj.samples.push_back(view.sample(y, t, eig));
    const auto& s = traj.samples.back();
    if (eig) {
      const double v = std::max({0.0, -s.min_eig, s.max_eig - 1.0});
      traj.max_pauli_violation = std::max(traj.max_pauli_violation, v);
    }
  };

  record(times.front(), false);
  for (std::size_t seg = 1; seg < times.size(); ++seg) {
    const double a = times[seg - 1];
    const double b = times[seg];
    const long n = step_count(b - a, plan.dt_max);
    const double h = (b - a) / n;
    for (long s = 0; s < n; ++s) {
      ws.step(y, a + s * h, h, rhs, post);
      traj.max_gram_defect = std::max(traj.max_gram_defect, ws.last_defect);
      const double f0 = view.band0_mean(y);
      if (f0_prev - f0 > traj.max_step_decrease_f0) {
        traj.max_step_decrease_f0 = f0_prev - f0;
        traj.max_step_decrease_time = a + (s + 1) * h;
      }
      f0_prev = f0;
      traj.max_trace_drift = std::max(traj.max_trace_drift, std::abs(view.trace(y) - trace0));
    }
    traj.steps += n;
    record(b, seg + 1 == times.size());
  }

  traj.closure_flagged = traj.max_pauli_violation > plan.pauli_flag_threshold;
  if (traj.closure_flagged) {
    std::ostringstream msg;
    msg << "closure health: eigenvalues left [0, 1] by " << traj.max_pauli_violation;
    traj.warnings.push_back(msg.str());
  }
  traj.final_state = CorrelationState(view.layout, view.correlation(y));
  return traj;
}

}  // namespace

double step_size(const IntegratorSettings& settings, double generator_norm, double duration) {
  if (!(duration > 0.0)) throw SpecError("integration interval must have positive length");
  double dt = duration / settings.min_steps;
  if (generator_norm > 0.0) dt = std::min(dt, settings.step_safety / generator_norm);
  return settings.dt_scale * dt;
}

std::vector<double> sample_times(double t0, double t1, int samples,
                                 std::span<const double> breakpoints) {
  if (samples < 2) throw SpecError("at least two samples are required");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(samples) + breakpoints.size());
  for (int i = 0; i < samples; ++i)
    grid.push_back(i == samples - 1 ? t1 : t0 + (t1 - t0) * i / (samples - 1));
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  for (double b : breakpoints)
    if (b > t0 + slack && b < t1 - slack) grid.push_back(b);
  std::sort(grid.begin(), grid.end());
  // Drop near-coincident points so every interval has positive length.
  std::vector<double> out;
  for (double t : grid)
    if (out.empty() || t - out.back() > slack) out.push_back(t);
  out.back() = t1;
  return out;
}

Trajectory integrate_rk4(const CorrelationState& initial, const IntegrationPlan& plan,
                         const MatrixRhs& rhs) {
  const StateView view{initial.layout(), nullptr};
  return run_plan(initial.matrix(), view, plan, rhs, PostStep::hermitian);
}

Trajectory integrate_rk4_orbitals(const OrbitalFactor& orbitals, const ModeLayout& layout,
                                  const IntegrationPlan& plan, const MatrixRhs& rhs) {
  if (orbitals.vectors.rows() != layout.size())
    throw SpecError("orbital factor row count does not match the mode layout");
  if (orbitals.weights.size() != orbitals.vectors.cols())
    throw SpecError("orbital factor needs one weight per column");
  const StateView view{layout, &orbitals.weights};
  return run_plan(orbitals.vectors, view, plan, rhs, PostStep::orthonormal);
}

Eigen::MatrixXcd integrate_rk4_matrix(Eigen::MatrixXcd y, double t0, double t1, double dt_max,
                                      std::span<const double> breakpoints, const MatrixRhs& rhs,
                                      PostStep post) {
  if (!(t1 > t0)) throw SpecError("integration requires t1 > t0");
  if (!(dt_max > 0.0) || !std::isfinite(dt_max)) throw NumericalError("invalid step size");
  std::vector<double> bounds{t0, t1};
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  for (double b : breakpoints)
    if (b > t0 + slack && b < t1 - slack) bounds.push_back(b);
  std::sort(bounds.begin(), bounds.end());
  Rk4Workspace ws;
  for (std::size_t seg = 1; seg < bounds.size(); ++seg) {
    const double a = bounds[seg - 1];
    const double b = bounds[seg];
    const long n = step_count(b - a, dt_max);
    const double h = (b - a) / n;
    for (long s = 0; s < n; ++s) ws.step(y, a + s * h, h, rhs, post);
  }
  return y;
}

}  // namespace fermiload
