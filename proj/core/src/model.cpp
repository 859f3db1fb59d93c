#include "fermiload/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fermiload/errors.hpp"

namespace fermiload {

ReservoirSpec ReservoirSpec::unit_fermi_energy(int particles, int modes) {
  return {particles, modes, kPi * particles / std::sqrt(2.0)};
}

void ReservoirSpec::validate() const {
  if (particle_count < 1) throw SpecError("reservoir particle count must be >= 1");
  if (mode_count < particle_count)
    throw SpecError("reservoir mode count K must be >= particle count N");
  if (mode_count % 2 == 0)
    throw SpecError("reservoir mode count K must be odd (symmetric momentum grid)");
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw SpecError("reservoir box length must be positive");
}

double LatticeSpec::oscillator_length() const { return 1.0 / std::sqrt(trap_frequency); }

double LatticeSpec::recoil_frequency() const {
  const double lambda = 2.0 * site_spacing;
  return 2.0 * kPi * kPi / (lambda * lambda);
}

double LatticeSpec::site_position(int site) const {
  return (site - 0.5 * (site_count - 1)) * site_spacing;
}

double LatticeSpec::offset(int site) const {
  return site_offsets.empty() ? 0.0 : site_offsets[static_cast<std::size_t>(site)];
}

void LatticeSpec::validate() const {
  if (site_count < 1) throw SpecError("lattice needs at least one site");
  if (!(trap_frequency > 0.0) || !std::isfinite(trap_frequency))
    throw SpecError("trap frequency omega must be > 0");
  if (!(site_spacing > 0.0) || !std::isfinite(site_spacing))
    throw SpecError("site spacing must be > 0");
  if (!site_offsets.empty() && static_cast<int>(site_offsets.size()) != site_count)
    throw SpecError("site offsets must list exactly one value per site");
  for (double v : site_offsets)
    if (!std::isfinite(v)) throw SpecError("site offsets must be finite");
}

void IntegratorSettings::validate() const {
  if (!(step_safety > 0.0)) throw SpecError("integrator step_safety must be > 0");
  if (min_steps < 1) throw SpecError("integrator min_steps must be >= 1");
  if (!(dt_scale > 0.0)) throw SpecError("integrator dt_scale must be > 0");
  if (samples < 2) throw SpecError("at least two trajectory samples are required");
}

void ModelSpec::validate() const {
  reservoir.validate();
  lattice.validate();
  drive.validate();
  integrator.validate();
  const double extent = lattice.site_count * lattice.site_spacing;
  if (!(reservoir.box_length > extent)) {
    std::ostringstream msg;
    msg << "box length " << reservoir.box_length << " must exceed lattice extent M*d = " << extent;
    throw SpecError(msg.str());
  }
}

std::vector<std::string> ModelSpec::warnings() const {
  std::vector<std::string> out;
  const double ratio = lattice.trap_frequency / lattice.recoil_frequency();
  if (ratio < 4.0) {
    std::ostringstream msg;
    msg << "shallow lattice: omega/omega_R = " << ratio << " < 4";
    out.push_back(msg.str());
  }
  return out;
}

std::vector<double> build_momentum_grid(const ReservoirSpec& reservoir) {
  if (reservoir.mode_count % 2 == 0 || reservoir.mode_count < 1)
    throw SpecError("momentum grid needs an odd mode count");
  if (!(reservoir.box_length > 0.0)) throw SpecError("momentum grid needs L > 0");
  const int half = (reservoir.mode_count - 1) / 2;
  const double dk = 2.0 * kPi / reservoir.box_length;
  std::vector<double> k;
  k.reserve(static_cast<std::size_t>(reservoir.mode_count));
  k.push_back(0.0);
  for (int j = 1; j <= half; ++j) {
    k.push_back(dk * j);
    k.push_back(-dk * j);
  }
  return k;
}

cplx coupling_amplitude(double k, int band, const LatticeSpec& lattice, double box_length) {
  if (band != 0 && band != 1) throw SpecError("unsupported band index " + std::to_string(band));
  const double a0 = lattice.oscillator_length();
  const double r0 = std::pow(4.0 * kPi * a0 * a0, 0.25) * std::exp(-0.5 * k * k * a0 * a0) /
                    std::sqrt(box_length);
  if (band == 0) return {r0, 0.0};
  return {0.0, std::sqrt(2.0) * a0 * k * r0};
}

CouplingTable CouplingTable::build(const ReservoirSpec& reservoir, const LatticeSpec& lattice) {
  CouplingTable table;
  table.momenta = build_momentum_grid(reservoir);
  const int kcount = table.modes();
  const int sites = lattice.site_count;
  table.amplitudes.resize(kcount, 2);
  table.phases.resize(kcount, sites);
  for (int j = 0; j < kcount; ++j) {
    const double k = table.momenta[static_cast<std::size_t>(j)];
    table.amplitudes(j, 0) = coupling_amplitude(k, 0, lattice, reservoir.box_length);
    table.amplitudes(j, 1) = coupling_amplitude(k, 1, lattice, reservoir.box_length);
    for (int a = 0; a < sites; ++a) {
      const double phase = -k * lattice.site_position(a);
      table.phases(j, a) = {std::cos(phase), std::sin(phase)};
    }
  }
  return table;
}

CorrelationState::CorrelationState(ModeLayout layout, Eigen::MatrixXcd matrix)
    : layout_(layout), matrix_(std::move(matrix)) {
  if (matrix_.rows() != layout_.size() || matrix_.cols() != layout_.size())
    throw SpecError("correlation matrix dimension does not match the mode layout");
}

CorrelationState CorrelationState::empty(ModeLayout layout) {
  return {layout, Eigen::MatrixXcd::Zero(layout.size(), layout.size())};
}

double CorrelationState::lattice_number() const {
  const int l = layout_.lattice_modes();
  return matrix_.diagonal().head(l).real().sum();
}

double CorrelationState::reservoir_number() const {
  return matrix_.diagonal().tail(layout_.reservoir_modes).real().sum();
}

double CorrelationState::hermiticity_residual() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

std::pair<double, double> CorrelationState::eigenvalue_range() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix_, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

CorrelationState fermi_sea_init(const ReservoirSpec& reservoir, const LatticeSpec& lattice) {
  reservoir.validate();
  const ModeLayout layout{lattice.site_count, reservoir.mode_count};
  auto state = Eigen::MatrixXcd::Zero(layout.size(), layout.size()).eval();
  // Grid order is by |k|, so the first N entries are the filled sea.
  for (int j = 0; j < reservoir.particle_count; ++j) state(layout.reservoir(j), layout.reservoir(j)) = 1.0;
  return {layout, std::move(state)};
}

Eigen::MatrixXcd OrbitalFactor::correlation() const {
  return vectors * weights.cast<cplx>().asDiagonal() * vectors.adjoint();
}

OrbitalFactor orbital_factor(const CorrelationState& state) {
  const auto& c = state.matrix();
  const Eigen::Index n = c.rows();
  OrbitalFactor f;
  const Eigen::MatrixXcd off = c - Eigen::MatrixXcd(c.diagonal().asDiagonal());
  if (n == 0 || off.cwiseAbs().maxCoeff() == 0.0) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = c(i, i).real();
      if (v < -1e-10) throw SpecError("correlation matrix has a negative occupation");
      if (v > 0.0) cols.push_back(i);
    }
    const auto r = static_cast<Eigen::Index>(cols.size());
    f.vectors = Eigen::MatrixXcd::Zero(n, r);
    f.weights.resize(r);
    for (Eigen::Index j = 0; j < r; ++j) {
      f.vectors(cols[static_cast<std::size_t>(j)], j) = 1.0;
      f.weights(j) = c(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(j)]).real();
    }
    return f;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (c + c.adjoint()));
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10) throw SpecError("correlation matrix is not positive semidefinite");
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ev(i) > 1e-14) cols.push_back(i);
  const auto r = static_cast<Eigen::Index>(cols.size());
  f.vectors.resize(n, r);
  f.weights.resize(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    f.vectors.col(j) = es.eigenvectors().col(cols[static_cast<std::size_t>(j)]);
    f.weights(j) = ev(cols[static_cast<std::size_t>(j)]);
  }
  return f;
}

double fidelity(const CorrelationState& state, int band) {
  if (band != 0 && band != 1) throw SpecError("unsupported band index " + std::to_string(band));
  const auto& layout = state.layout();
  double sum = 0.0;
  for (int a = 0; a < layout.sites; ++a) sum += state.occupation(layout.lattice(a, band));
  return sum / layout.sites;
}

cplx collective_mode_overlap(int alpha, int beta, int n, int m, const CouplingTable& table) {
  cplx sum{0.0, 0.0};
  for (int j = 0; j < table.modes(); ++j) {
    // e^{ik(x_a - x_b)} = conj(P[k][a]) * P[k][b]
    sum += std::conj(table.amplitudes(j, n)) * table.amplitudes(j, m) *
           std::conj(table.phases(j, alpha)) * table.phases(j, beta);
  }
  return sum;
}

TrajectorySample observe(const CorrelationState& state, double t, bool with_eigenvalues) {
  const auto& layout = state.layout();
  TrajectorySample s;
  s.t = t;
  s.site_band0.resize(static_cast<std::size_t>(layout.sites));
  s.site_band1.resize(static_cast<std::size_t>(layout.sites));
  for (int a = 0; a < layout.sites; ++a) {
    s.site_band0[static_cast<std::size_t>(a)] = state.occupation(layout.lattice(a, 0));
    s.site_band1[static_cast<std::size_t>(a)] = state.occupation(layout.lattice(a, 1));
  }
  s.f0 = std::accumulate(s.site_band0.begin(), s.site_band0.end(), 0.0) / layout.sites;
  s.f1 = std::accumulate(s.site_band1.begin(), s.site_band1.end(), 0.0) / layout.sites;
  s.reservoir_number = state.reservoir_number();
  s.total_number = state.total_number();
  s.herm_residual = state.hermiticity_residual();
  if (with_eigenvalues) {
    std::tie(s.min_eig, s.max_eig) = state.eigenvalue_range();
  } else {
    s.min_eig = s.max_eig = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

void Trajectory::append(const Trajectory& later) {
  if (later.samples.empty()) return;
  auto first = later.samples.begin();
  if (!samples.empty() && first->t <= samples.back().t) ++first;
  samples.insert(samples.end(), first, later.samples.end());
  final_state = later.final_state;
  warnings.insert(warnings.end(), later.warnings.begin(), later.warnings.end());
  steps += later.steps;
  dt_max = std::max(dt_max, later.dt_max);
  max_pauli_violation = std::max(max_pauli_violation, later.max_pauli_violation);
  if (later.max_step_decrease_f0 > max_step_decrease_f0) {
    max_step_decrease_f0 = later.max_step_decrease_f0;
    max_step_decrease_time = later.max_step_decrease_time;
  }
  // Drifts are measured from each segment's own start, so they add.
  max_trace_drift += later.max_trace_drift;
  max_gram_defect = std::max(max_gram_defect, later.max_gram_defect);
  closure_flagged = closure_flagged || later.closure_flagged;
}

}  // namespace fermiload
