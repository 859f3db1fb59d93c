// Acceptance checks against the shipped presets. Each criterion prints one
// PASS or FAIL line followed by the measured quantities.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fermiload/cli/config.hpp"
#include "fermiload/cli/runner.hpp"
#include "fermiload/cli/verify.hpp"
#include "fermiload/dissipative.hpp"
#include "fermiload/oracle.hpp"

using namespace fermiload;
using namespace fermiload::cli;

namespace {

namespace tol {
constexpr double rabi_peak = 1e-4;          // max F_m >= 1 - rabi_peak
constexpr double rabi_period_rel = 0.02;
constexpr double fig5a_f1 = 0.99;
constexpr double fig5b_f1 = 0.95;
constexpr double fig5b_from_time = 300.0;
constexpr double fig7_f0 = 0.999;
constexpr double fig7_f1 = 0.01;
constexpr double monotone_step = 1e-6;
constexpr double physical_rate_khz = 3.6;
constexpr double physical_rate_rel = 0.10;
constexpr double scaling_rel = 1e-10;
constexpr double oracle_elementwise = 1e-8;
constexpr int oracle_max_modes = 41;
constexpr double lindblad_gamma0 = 1e-8;
constexpr double closure_plot = 1e-4;
constexpr double hermiticity = 1e-10;
constexpr double trace_rate = 1e-8;
constexpr double pauli_coherent = 1e-8;
constexpr double pauli_flag = 1e-3;
constexpr double envelope_origin = 1e-12;
constexpr double envelope_asymptote_rel = 0.02;
constexpr double dt_halving = 1e-4;
constexpr double pattern_empty = 0.05;
constexpr double pattern_full = 0.9;
}  // namespace tol

struct Verdict {
  bool passed{true};
  std::ostringstream notes;

  void require(bool ok, const std::string& what) {
    passed = passed && ok;
    notes << "  [" << (ok ? "ok" : "FAILED") << "] " << what << '\n';
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const PresetCatalog& catalog() {
  static const PresetCatalog c;
  return c;
}

RunConfig preset(const std::string& name, std::initializer_list<std::pair<std::string, std::string>> sets = {}) {
  KeyValues kv;
  kv.set("run.preset", name);
  for (const auto& [k, v] : sets) kv.set(k, v);
  return parse_config(kv, catalog());
}

std::vector<std::pair<RunConfig, Trajectory>> run_cells(const RunConfig& config) {
  std::vector<std::pair<RunConfig, Trajectory>> out;
  if (config.scan.empty()) {
    out.emplace_back(config, execute(config));
    return out;
  }
  for (const auto& cell : expand_scan(config)) out.emplace_back(cell, execute(cell));
  return out;
}

// Times of interior local maxima, refined by a parabola through three samples.
std::vector<double> peak_times(const Trajectory& t, bool band1) {
  std::vector<double> peaks;
  const auto& s = t.samples;
  auto f = [&](std::size_t i) { return band1 ? s[i].f1 : s[i].f0; };
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (f(i) > f(i - 1) && f(i) >= f(i + 1) && f(i) > 0.5) {
      const double h = s[i + 1].t - s[i].t;
      const double denom = f(i - 1) - 2.0 * f(i) + f(i + 1);
      const double shift = denom != 0.0 ? 0.5 * (f(i - 1) - f(i + 1)) / denom : 0.0;
      peaks.push_back(s[i].t + shift * h);
    }
  }
  return peaks;
}

Verdict criterion_1() {
  Verdict v;
  const auto cfg = preset("fig3a", {{"run.samples", "2000"}});
  const auto traj = execute(cfg);
  const double omega = cfg.spec.model.drive.omega().max_value();
  const double expected = 2.0 * kPi / omega;
  for (bool band1 : {false, true}) {
    const std::string name = band1 ? "F1" : "F0";
    double best = 0.0;
    for (const auto& s : traj.samples) best = std::max(best, band1 ? s.f1 : s.f0);
    v.require(best >= 1.0 - tol::rabi_peak, "max " + name + " = " + fmt("%.8f", best) + " >= 1 - 1e-4");
    const auto peaks = peak_times(traj, band1);
    if (peaks.size() < 2) {
      v.require(false, name + ": fewer than two maxima");
      continue;
    }
    const double period = (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
    const double rel = std::abs(period / expected - 1.0);
    v.require(rel < tol::rabi_period_rel, name + " period " + fmt("%.6f", period) + " vs 2 pi / Omega = " +
                                              fmt("%.6f", expected) + ", relative " + fmt("%.2e", rel));
  }
  return v;
}

Verdict criterion_2() {
  Verdict v;
  const auto cells = run_cells(preset("fig3b"));
  double previous = INFINITY;
  for (const auto& [cfg, traj] : cells) {
    const double na0 = std::stod(*cfg.resolved.get("lattice.density_a0"));
    const double infidelity = 1.0 - traj.back().f1;
    v.require(infidelity < previous,
              "n a0 = " + fmt("%.2f", na0) + ": 1 - F1(pi / Omega) = " + fmt("%.6e", infidelity));
    previous = infidelity;
  }
  return v;
}

Verdict criterion_3() {
  Verdict v;
  const auto traj = execute(preset("fig5a"));
  v.require(traj.back().f1 > tol::fig5a_f1, "final F1 = " + fmt("%.6f", traj.back().f1) + " > 0.99");
  return v;
}

Verdict criterion_4() {
  Verdict v;
  const auto cells = run_cells(preset("fig5b_scan"));
  double previous = -INFINITY;
  for (const auto& [cfg, traj] : cells) {
    const double t = cfg.spec.model.drive.duration();
    const double f1 = traj.back().f1;
    v.require(f1 >= previous, "T = " + fmt("%g", t) + ": F1 = " + fmt("%.6f", f1) + " non-decreasing");
    if (t >= tol::fig5b_from_time) v.require(f1 > tol::fig5b_f1, "T = " + fmt("%g", t) + ": F1 > 0.95");
    previous = f1;
  }
  return v;
}

Verdict criterion_5() {
  Verdict v;
  double previous = INFINITY;
  for (const auto& [cfg, traj] : run_cells(preset("fig6a"))) {
    const double f0 = traj.back().f0;
    v.require(f0 < previous, "omega = " + fmt("%g", cfg.spec.model.lattice.trap_frequency) +
                                 ": F0 = " + fmt("%.6e", f0) + " decreasing");
    previous = f0;
  }
  previous = -INFINITY;
  for (const auto& [cfg, traj] : run_cells(preset("fig6b"))) {
    const double f0 = traj.back().f0;
    v.require(f0 > previous, "Omega = " + fmt("%g", cfg.spec.model.drive.omega().max_value()) +
                                 ": F0 = " + fmt("%.6e", f0) + " increasing");
    previous = f0;
  }
  return v;
}

Verdict criterion_6() {
  Verdict v;
  const auto traj = execute(preset("fig7"));
  v.require(traj.back().f0 >= tol::fig7_f0, "final F0 = " + fmt("%.8f", traj.back().f0) + " >= 0.999");
  v.require(traj.back().f1 <= tol::fig7_f1, "final F1 = " + fmt("%.3e", traj.back().f1) + " <= 0.01");
  v.require(traj.max_step_decrease_f0 <= tol::monotone_step,
            "largest per-step F0 decrease = " + fmt("%.3e", traj.max_step_decrease_f0) + " <= 1e-6");
  return v;
}

Verdict criterion_7() {
  Verdict v;
  const auto base = PhysicalRateInput::potassium40();
  const double rate = gamma_onsite_physical(base);
  const double rel = std::abs(rate / tol::physical_rate_khz - 1.0);
  v.require(rel <= tol::physical_rate_rel,
            "Gamma / 2 pi = " + fmt("%.6f", rate) + " kHz vs 3.6 kHz, relative " + fmt("%.3f", rel));
  for (double f : {0.5, 2.0, 3.7}) {
    auto a = base;
    a.scattering_length_bohr *= f;
    const double ra = std::abs(gamma_onsite_physical(a) / rate / (f * f) - 1.0);
    v.require(ra < tol::scaling_rel, "a_s x " + fmt("%g", f) + ": rate / a_s^2 relative " + fmt("%.1e", ra));
    auto n = base;
    n.density_cm3 *= f;
    const double rn = std::abs(gamma_onsite_physical(n) / rate / f - 1.0);
    v.require(rn < tol::scaling_rel, "n x " + fmt("%g", f) + ": rate / n relative " + fmt("%.1e", rn));
  }
  return v;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

Verdict criterion_8() {
  Verdict v;
  // Two constant drive segments on small grids, compared elementwise with exact propagators.
  struct Instance {
    int particles, modes, sites;
    double omega, density_spacing;
  };
  for (const auto& in : {Instance{11, 21, 2, 3.0, 1.5}, Instance{21, 41, 3, 10.0, 1.7}, Instance{9, 41, 1, 5.0, 3.4}}) {
    ModelSpec first;
    first.reservoir = ReservoirSpec::unit_fermi_energy(in.particles, in.modes);
    first.lattice.site_count = in.sites;
    first.lattice.trap_frequency = in.omega;
    first.lattice.site_spacing = in.density_spacing / first.reservoir.density();
    first.integrator.step_safety = 0.02;
    first.integrator.samples = 2;
    ModelSpec second = first;
    first.drive = DriveSchedule::constant(0.9, 0.7, 3.0);
    second.drive = DriveSchedule::constant(0.5, 0.2, 5.0);
    const auto sea = fermi_sea_init(first.reservoir, first.lattice);
    const auto rk = evolve_coherent(sea, first, 0.0, 3.0);
    const auto rk2 = evolve_coherent(rk, second, 0.0, 5.0);
    const auto exact = exact_piecewise_evolve(exact_piecewise_evolve(sea.matrix(), first, 0.0, 3.0), second,
                                              0.0, 5.0);
    const double err = max_abs(rk2.matrix() - exact);
    v.require(in.modes <= tol::oracle_max_modes && err < tol::oracle_elementwise,
              "coherent vs propagator, K = " + std::to_string(in.modes) + ", M = " + std::to_string(in.sites) +
                  ": " + fmt("%.2e", err));
  }
  for (const auto& c : verify_suite()) {
    if (c.name == "oracle.lindblad_gamma0_vs_closed")
      v.require(c.value < tol::lindblad_gamma0, "exact Lindblad vs closed at Gamma = 0: " + fmt("%.2e", c.value));
    if (c.name == "oracle.closure_closed_form") {
      v.require(c.value < tol::closure_plot,
                "closed equations vs 1/(1 + Gamma t): " + fmt("%.2e", c.value) + " (" + c.detail + ")");
    }
  }
  return v;
}

Verdict criterion_9() {
  Verdict v;
  v.require(std::abs(envelope(0.0) - 1.0) < tol::envelope_origin, "F(0) = " + fmt("%.15f", envelope(0.0)));
  for (double xi : {20.5 * kPi, 50.5 * kPi, 100.5 * kPi}) {
    const double rel = std::abs(envelope(xi) / (3.0 * std::sin(xi) / xi) - 1.0);
    v.require(rel < tol::envelope_asymptote_rel, "F / (3 sin xi / xi) at xi = " + fmt("%.1f", xi) + ": " +
                                                     fmt("%.2e", rel));
  }
  for (const auto& name : catalog().names()) {
    const auto base = preset(name);
    const auto halved = with_dt_scale(base, 0.5);
    const auto coarse = run_cells(base);
    const auto fine = run_cells(halved);
    double herm = 0.0, rate = 0.0, pauli = 0.0, dt_change = 0.0;
    bool flag_consistent = true;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      const auto& [cfg, traj] = coarse[i];
      for (const auto& s : traj.samples) herm = std::max(herm, s.herm_residual);
      rate = std::max(rate, traj.max_trace_drift / traj.back().t);
      pauli = std::max(pauli, traj.max_pauli_violation);
      if (cfg.kind == RunKind::combined)
        flag_consistent = flag_consistent && traj.closure_flagged == (traj.max_pauli_violation > tol::pauli_flag);
      const auto& f = fine[i].second.back();
      dt_change = std::max({dt_change, std::abs(f.f0 - traj.back().f0), std::abs(f.f1 - traj.back().f1)});
    }
    const bool combined = base.kind == RunKind::combined;
    v.require(herm < tol::hermiticity, name + ": Hermiticity " + fmt("%.2e", herm));
    v.require(rate < tol::trace_rate, name + ": trace drift per unit time " + fmt("%.2e", rate));
    if (combined) {
      v.require(flag_consistent, name + ": Pauli excursion " + fmt("%.2e", pauli) + " flagged iff > 1e-3");
    } else {
      v.require(pauli < tol::pauli_coherent, name + ": Pauli excursion " + fmt("%.2e", pauli));
    }
    v.require(dt_change < tol::dt_halving, name + ": dt halving changes final F by " + fmt("%.2e", dt_change));
  }
  return v;
}

Verdict criterion_10() {
  Verdict v;
  const auto cfg = preset("fig7_pattern");
  const auto& lat = cfg.spec.model.lattice;
  const auto shifted = std::max_element(lat.site_offsets.begin(), lat.site_offsets.end()) - lat.site_offsets.begin();
  const double ratio = lat.site_offsets[static_cast<std::size_t>(shifted)] / cfg.spec.model.drive.omega().max_value();
  v.require(std::abs(ratio - 20.0) < 1e-12, "offset / Omega = " + fmt("%g", ratio));
  const auto traj = execute(cfg);
  const auto& n0 = traj.back().site_band0;
  for (std::size_t a = 0; a < n0.size(); ++a) {
    const bool target = static_cast<long>(a) == shifted;
    v.require(target ? n0[a] < tol::pattern_empty : n0[a] >= tol::pattern_full,
              "site " + std::to_string(a) + (target ? " (shifted)" : "") + ": n0 = " + fmt("%.6f", n0[a]));
  }
  return v;
}

const std::map<int, std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::map<int, std::pair<std::string, std::function<Verdict()>>> table{
      {1, {"fast-regime Rabi fidelity and period", criterion_1}},
      {2, {"fast-regime density scaling", criterion_2}},
      {3, {"slow-regime optimised sweep", criterion_3}},
      {4, {"slow-regime linear sweep", criterion_4}},
      {5, {"band-selectivity scans", criterion_5}},
      {6, {"combined scheme", criterion_6}},
      {7, {"physical decay rate", criterion_7}},
      {8, {"oracle equivalence", criterion_8}},
      {9, {"invariant suite", criterion_9}},
      {10, {"pattern loading", criterion_10}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion number(s); all when omitted")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (const auto& [n, c] : criteria()) selected.push_back(n);

  bool all = true;
  for (int n : selected) {
    const auto& [title, fn] = criteria().at(n);
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (v.passed ? "PASS" : "FAIL") << " criterion " << n << ": " << title << '\n'
              << v.notes.str() << std::flush;
    all = all && v.passed;
  }
  return all ? 0 : 1;
}
