#pragma once

#include <span>
#include <vector>

namespace fermiload {

// Continuous piecewise-linear function of time defined on [start(), end()].
class PiecewiseLinear {
 public:
  struct Knot {
    double t{};
    double value{};
  };

  PiecewiseLinear() = default;
  // Knot times must be strictly increasing; at least one knot.
  explicit PiecewiseLinear(std::vector<Knot> knots);

  static PiecewiseLinear constant(double value, double t_end);
  static PiecewiseLinear ramp(double from, double to, double t_end);

  // Throws SpecError when t lies outside the domain (beyond a 1e-9 relative slack).
  double operator()(double t) const;

  // Exact integral of the profile from start() to t.
  double integral(double t) const;

  double start() const { return knots_.front().t; }
  double end() const { return knots_.back().t; }
  double min_value() const;
  double max_value() const;
  bool is_constant() const;
  bool empty() const { return knots_.empty(); }

  // Appends a linear segment of the given duration ending at `value`.
  PiecewiseLinear then(double duration, double value) const;

  std::span<const Knot> knots() const { return knots_; }

 private:
  std::vector<Knot> knots_;
};

struct DriveSample {
  double omega{};
  double epsilon{};
};

// Rabi amplitude and resonant sweep energy, both piecewise-linear on a common domain [0, T].
class DriveSchedule {
 public:
  DriveSchedule() = default;
  DriveSchedule(PiecewiseLinear omega, PiecewiseLinear epsilon);

  static DriveSchedule constant(double omega, double epsilon, double duration);
  // Linear sweep of epsilon; omega ramps linearly from 0 and saturates at
  // omega_max at omega_ramp_time (no ramp when omega_ramp_time == 0).
  static DriveSchedule linear_sweep(double epsilon_from, double epsilon_to, double duration,
                                    double omega_max, double omega_ramp_time = 0.0);

  DriveSample operator()(double t) const { return {omega_(t), epsilon_(t)}; }

  const PiecewiseLinear& omega() const { return omega_; }
  const PiecewiseLinear& epsilon() const { return epsilon_; }
  double duration() const { return omega_.end(); }

  // Appends a segment in which both profiles move linearly to the given targets.
  DriveSchedule then(double duration, double omega_target, double epsilon_target) const;

  // Sorted union of knot times of both profiles.
  std::vector<double> breakpoints() const;

  void validate() const;

 private:
  PiecewiseLinear omega_;
  PiecewiseLinear epsilon_;
};

}  // namespace fermiload
