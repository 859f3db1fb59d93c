#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fermiload/model.hpp"

namespace fermiload {

// dY/dt = f(t, Y); writes the derivative into `out`.
using MatrixRhs =
    std::function<void(double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out)>;

struct IntegrationPlan {
  double t0{};
  double t1{};
  double dt_max{};
  std::vector<double> breakpoints;  // schedule knots; steps never straddle one
  int samples{400};
  bool eigen_diagnostics{true};
  double pauli_flag_threshold{1e-3};
};

// dt_max = dt_scale * min(step_safety / generator_norm, duration / min_steps).
double step_size(const IntegratorSettings& settings, double generator_norm, double duration);

// Uniform sample grid over [t0, t1] merged with the breakpoints inside it.
std::vector<double> sample_times(double t0, double t1, int samples,
                                 std::span<const double> breakpoints);

// Projection applied after every RK4 step.
enum class PostStep {
  none,
  hermitian,    // Y <- (Y + Y^dagger) / 2
  orthonormal,  // Y <- Y (I - E / 2), E = Y^dagger Y - I, restoring orthonormal columns
};

// Fixed-step RK4 on the correlation matrix itself. Every interval between
// consecutive sample times is split into ceil(len / dt_max) equal steps and C
// is re-symmetrised after each step. Throws NumericalError on non-finite values.
Trajectory integrate_rk4(const CorrelationState& initial, const IntegrationPlan& plan,
                         const MatrixRhs& rhs);

// Same stepping on the orthonormal vectors Y of C = Y diag(w) Y^dagger. The
// rhs maps Y to dY/dt (a linear, norm-preserving flow); the columns are
// re-orthonormalised after each step and the largest defect removed is
// reported in Trajectory::max_gram_defect.
Trajectory integrate_rk4_orbitals(const OrbitalFactor& orbitals, const ModeLayout& layout,
                                  const IntegrationPlan& plan, const MatrixRhs& rhs);

// Plain stepping without trajectory bookkeeping.
Eigen::MatrixXcd integrate_rk4_matrix(Eigen::MatrixXcd y, double t0, double t1, double dt_max,
                                      std::span<const double> breakpoints, const MatrixRhs& rhs,
                                      PostStep post = PostStep::hermitian);

}  // namespace fermiload
