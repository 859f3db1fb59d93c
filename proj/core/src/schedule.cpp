#include "fermiload/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fermiload/errors.hpp"

namespace fermiload {

PiecewiseLinear::PiecewiseLinear(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw SpecError("piecewise-linear profile needs at least one knot");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].t) || !std::isfinite(knots_[i].value))
      throw SpecError("piecewise-linear profile has a non-finite knot");
    if (i > 0 && !(knots_[i].t > knots_[i - 1].t))
      throw SpecError("piecewise-linear knot times must be strictly increasing");
  }
}

PiecewiseLinear PiecewiseLinear::constant(double value, double t_end) {
  return PiecewiseLinear({{0.0, value}, {t_end, value}});
}

PiecewiseLinear PiecewiseLinear::ramp(double from, double to, double t_end) {
  return PiecewiseLinear({{0.0, from}, {t_end, to}});
}

double PiecewiseLinear::operator()(double t) const {
  const double slack = 1e-9 * std::max(1.0, std::abs(end()));
  if (t < start() - slack || t > end() + slack)
    throw SpecError("time " + std::to_string(t) + " outside schedule domain [" +
                    std::to_string(start()) + ", " + std::to_string(end()) + "]");
  if (knots_.size() == 1 || t <= start()) return knots_.front().value;
  if (t >= end()) return knots_.back().value;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double x, const Knot& k) { return x < k.t; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return lo.value + w * (hi.value - lo.value);
}

double PiecewiseLinear::integral(double t) const {
  const double vt = (*this)(t);  // domain check
  double sum = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const Knot& lo = knots_[i - 1];
    const Knot& hi = knots_[i];
    if (t <= lo.t) break;
    if (t >= hi.t) {
      sum += 0.5 * (lo.value + hi.value) * (hi.t - lo.t);
    } else {
      sum += 0.5 * (lo.value + vt) * (t - lo.t);
      break;
    }
  }
  return sum;
}

double PiecewiseLinear::min_value() const {
  return std::min_element(knots_.begin(), knots_.end(),
                          [](const Knot& a, const Knot& b) { return a.value < b.value; })
      ->value;
}

double PiecewiseLinear::max_value() const {
  return std::max_element(knots_.begin(), knots_.end(),
                          [](const Knot& a, const Knot& b) { return a.value < b.value; })
      ->value;
}

bool PiecewiseLinear::is_constant() const { return min_value() == max_value(); }

PiecewiseLinear PiecewiseLinear::then(double duration, double value) const {
  if (!(duration > 0.0)) throw SpecError("appended segment duration must be positive");
  auto knots = knots_;
  knots.push_back({end() + duration, value});
  return PiecewiseLinear(std::move(knots));
}

DriveSchedule::DriveSchedule(PiecewiseLinear omega, PiecewiseLinear epsilon)
    : omega_(std::move(omega)), epsilon_(std::move(epsilon)) {
  validate();
}

DriveSchedule DriveSchedule::constant(double omega, double epsilon, double duration) {
  if (!(duration > 0.0)) throw SpecError("drive duration must be positive");
  return {PiecewiseLinear::constant(omega, duration), PiecewiseLinear::constant(epsilon, duration)};
}

DriveSchedule DriveSchedule::linear_sweep(double epsilon_from, double epsilon_to, double duration,
                                          double omega_max, double omega_ramp_time) {
  if (!(duration > 0.0)) throw SpecError("sweep duration must be positive");
  if (omega_ramp_time < 0.0) throw SpecError("omega ramp time must be >= 0");
  PiecewiseLinear omega;
  if (omega_ramp_time == 0.0) {
    omega = PiecewiseLinear::constant(omega_max, duration);
  } else if (omega_ramp_time < duration) {
    omega = PiecewiseLinear({{0.0, 0.0}, {omega_ramp_time, omega_max}, {duration, omega_max}});
  } else {
    omega = PiecewiseLinear::ramp(0.0, omega_max * duration / omega_ramp_time, duration);
  }
  return {std::move(omega), PiecewiseLinear::ramp(epsilon_from, epsilon_to, duration)};
}

DriveSchedule DriveSchedule::then(double duration, double omega_target,
                                  double epsilon_target) const {
  return {omega_.then(duration, omega_target), epsilon_.then(duration, epsilon_target)};
}

std::vector<double> DriveSchedule::breakpoints() const {
  std::vector<double> out;
  for (const auto& k : omega_.knots()) out.push_back(k.t);
  for (const auto& k : epsilon_.knots()) out.push_back(k.t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void DriveSchedule::validate() const {
  if (omega_.empty() || epsilon_.empty()) throw SpecError("drive schedule is empty");
  if (omega_.start() != 0.0 || epsilon_.start() != 0.0)
    throw SpecError("drive profiles must start at t = 0");
  if (omega_.end() != epsilon_.end())
    throw SpecError("omega and epsilon profiles must share the same end time");
  if (!(omega_.end() > 0.0)) throw SpecError("drive duration must be positive");
  if (omega_.min_value() < 0.0) throw SpecError("Rabi amplitude omega(t) must be >= 0");
}

}  // namespace fermiload
