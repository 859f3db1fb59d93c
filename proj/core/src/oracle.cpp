#include "fermiload/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "fermiload/errors.hpp"
#include "fermiload/integrator.hpp"

namespace fermiload {

namespace {

using Triplet = Eigen::Triplet<cplx>;

int parity_below(unsigned long s, int q) {
  return std::popcount(s & ((1UL << q) - 1UL)) & 1;
}

double sparse_row_sum_norm(const SparseOp& op) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(op.rows());
  for (int k = 0; k < op.outerSize(); ++k)
    for (SparseOp::InnerIterator it(op, k); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

// Tr(rho A)
cplx trace_product(const Eigen::MatrixXcd& rho, const SparseOp& a) {
  cplx sum{0.0, 0.0};
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseOp::InnerIterator it(a, k); it; ++it) sum += it.value() * rho(it.col(), it.row());
  return sum;
}

Eigen::MatrixXcd restrict(const Eigen::MatrixXcd& m, const std::vector<int>& modes) {
  const auto n = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXcd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = m(modes[static_cast<std::size_t>(i)], modes[static_cast<std::size_t>(j)]);
  return out;
}

// Restricted single-particle Hamiltonian split as h = h_s + eps h_e + Omega h_o.
struct AffineHamiltonian {
  Eigen::MatrixXcd fixed, eps, omega;

  Eigen::MatrixXcd at(const DriveSample& d) const { return fixed + d.epsilon * eps + d.omega * omega; }
};

AffineHamiltonian restricted_hamiltonian(const ModelSpec& model, const FockConfig& config) {
  const auto table = CouplingTable::build(model.reservoir, model.lattice);
  const CoherentHamiltonian h(model, table);
  const Eigen::MatrixXcd h00 = h.dense(DriveSample{0.0, 0.0});
  AffineHamiltonian a;
  a.fixed = restrict(h00, config.modes());
  a.eps = restrict(h.dense(DriveSample{0.0, 1.0}) - h00, config.modes());
  a.omega = restrict(h.dense(DriveSample{1.0, 0.0}) - h00, config.modes());
  return a;
}

std::vector<std::pair<int, int>> local_pairs(const FockConfig& config, const ModeLayout& layout) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [p0, p1] : site_pairs(layout)) {
    const int l0 = config.local(p0);
    const int l1 = config.local(p1);
    if (l0 >= 0 && l1 >= 0) out.emplace_back(l0, l1);
  }
  return out;
}

std::vector<double> knots_within(const DriveSchedule& drive, double t0, double t1) {
  std::vector<double> out;
  for (double b : drive.breakpoints())
    if (b > t0 && b < t1) out.push_back(b);
  return out;
}

double max_drive_weighted_norm(const DriveSchedule& drive, double t0, double t1, double fixed,
                               double eps, double omega) {
  std::vector<double> ts{t0, t1};
  for (double b : knots_within(drive, t0, t1)) ts.push_back(b);
  double best = 0.0;
  for (double t : ts) {
    const auto d = drive(t);
    best = std::max(best, fixed + std::abs(d.epsilon) * eps + d.omega * omega);
  }
  return best;
}

Eigen::MatrixXd product_occupations(const Eigen::MatrixXcd& rho, int modes) {
  Eigen::MatrixXd occ = Eigen::MatrixXd::Zero(1, modes);
  for (long s = 0; s < rho.rows(); ++s) {
    const double p = rho(s, s).real();
    for (int q = 0; q < modes; ++q)
      if ((static_cast<unsigned long>(s) >> q) & 1UL) occ(0, q) += p;
  }
  return occ;
}

}  // namespace

FockConfig::FockConfig(std::vector<int> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) throw SpecError("Fock config needs at least one mode");
  if (static_cast<int>(modes_.size()) > max_modes) {
    std::ostringstream msg;
    msg << "Fock config with " << modes_.size() << " modes exceeds the " << max_modes
        << "-mode budget";
    throw SpecError(msg.str());
  }
  std::set<int> seen;
  for (int m : modes_) {
    if (m < 0) throw SpecError("Fock config mode indices must be >= 0");
    if (!seen.insert(m).second) throw SpecError("Fock config lists a mode twice");
  }
}

FockConfig FockConfig::full(const ModeLayout& layout) {
  std::vector<int> modes(static_cast<std::size_t>(layout.size()));
  for (int i = 0; i < layout.size(); ++i) modes[static_cast<std::size_t>(i)] = i;
  return FockConfig(std::move(modes));
}

int FockConfig::local(int layout_index) const {
  auto it = std::find(modes_.begin(), modes_.end(), layout_index);
  return it == modes_.end() ? -1 : static_cast<int>(it - modes_.begin());
}

FockOperators::FockOperators(int modes) : modes_(modes) {
  if (modes < 1 || modes > FockConfig::max_modes)
    throw SpecError("Fock operator mode count out of range");
  const long dim = dimension();
  for (int q = 0; q < modes; ++q) {
    std::vector<Triplet> trip;
    for (long s = 0; s < dim; ++s) {
      const auto us = static_cast<unsigned long>(s);
      if (!((us >> q) & 1UL)) continue;
      const double sign = parity_below(us, q) ? -1.0 : 1.0;
      trip.emplace_back(static_cast<int>(us ^ (1UL << q)), static_cast<int>(s), sign);
    }
    SparseOp op(dim, dim);
    op.setFromTriplets(trip.begin(), trip.end());
    c_.push_back(std::move(op));
  }
}

SparseOp FockOperators::quadratic(const Eigen::MatrixXcd& h) const {
  if (h.rows() != modes_ || h.cols() != modes_) throw SpecError("quadratic: size mismatch");
  const long dim = dimension();
  std::vector<Triplet> trip;
  for (long s = 0; s < dim; ++s) {
    const auto us = static_cast<unsigned long>(s);
    for (int b = 0; b < modes_; ++b) {
      if (!((us >> b) & 1UL)) continue;
      const double sb = parity_below(us, b) ? -1.0 : 1.0;
      const unsigned long s1 = us ^ (1UL << b);
      for (int a = 0; a < modes_; ++a) {
        const cplx v = h(a, b);
        if (v == cplx{0.0, 0.0} || ((s1 >> a) & 1UL)) continue;
        const double sa = parity_below(s1, a) ? -1.0 : 1.0;
        trip.emplace_back(static_cast<int>(s1 | (1UL << a)), static_cast<int>(s), sa * sb * v);
      }
    }
  }
  SparseOp op(dim, dim);
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

Eigen::MatrixXcd propagator_oracle(const GeneratorMatrix& generator, double dt) {
  const auto& m = generator.matrix;
  if (m.rows() != m.cols()) throw SpecError("generator must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m + m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw SpecError("propagator_oracle: generator is not anti-Hermitian");
  const Eigen::MatrixXcd h = cplx{0.0, 1.0} * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXcd phases =
      (cplx{0.0, -dt} * es.eigenvalues().cast<cplx>()).array().exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd propagate_correlation(const Eigen::MatrixXcd& c, const Eigen::MatrixXcd& u) {
  return u.conjugate() * c * u.transpose();
}

Eigen::MatrixXcd exact_piecewise_evolve(const Eigen::MatrixXcd& c, const ModelSpec& spec,
                                        double t0, double t1) {
  spec.validate();
  if (!(t1 > t0)) throw SpecError("evolution requires t1 > t0");
  const auto table = CouplingTable::build(spec.reservoir, spec.lattice);
  std::vector<double> bounds{t0};
  for (double b : knots_within(spec.drive, t0, t1)) bounds.push_back(b);
  bounds.push_back(t1);
  Eigen::MatrixXcd out = c;
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    const double a = bounds[i - 1];
    const double b = bounds[i];
    const auto da = spec.drive(a);
    const auto db = spec.drive(b);
    if (da.omega != db.omega || da.epsilon != db.epsilon)
      throw SpecError("exact_piecewise_evolve needs a schedule constant between breakpoints");
    const auto gen = assemble_generator(0.5 * (a + b), spec, table);
    out = propagate_correlation(out, propagator_oracle(gen, b - a));
  }
  return out;
}

Eigen::MatrixXcd LindbladResult::correlation(const FockOperators& ops) const {
  const int n = ops.modes();
  Eigen::MatrixXcd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const SparseOp op = ops.creation(i) * ops.annihilation(j);
      c(i, j) = trace_product(rho, op);
    }
  return c;
}

cplx LindbladResult::quartic(const FockOperators& ops, int i, int j, int k, int l) const {
  const SparseOp op = ops.creation(i) * ops.creation(j) * ops.annihilation(k) * ops.annihilation(l);
  return trace_product(rho, op);
}

LindbladResult exact_lindblad_evolve(const FockConfig& config, const CombinedRunSpec& spec,
                                     const CorrelationState& initial, double t0, double t1,
                                     const OracleSettings& settings) {
  spec.validate();
  const ModelSpec model = spec.resolved_model();
  const ModeLayout layout = ModeLayout::of(model);
  if (!(initial.layout() == layout)) throw SpecError("initial state layout mismatch");
  for (int m : config.modes())
    if (m >= layout.size()) throw SpecError("Fock config mode outside the model layout");
  if (!(t1 > t0)) throw SpecError("evolution requires t1 > t0");

  const int n = config.mode_count();
  const FockOperators ops(n);
  const auto h = restricted_hamiltonian(model, config);
  const SparseOp hs = ops.quadratic(h.fixed);
  const SparseOp he = ops.quadratic(h.eps);
  const SparseOp ho = ops.quadratic(h.omega);

  const double gamma = spec.dissipation.gamma;
  std::vector<SparseOp> jumps;
  SparseOp decay(ops.dimension(), ops.dimension());
  for (const auto& [l0, l1] : local_pairs(config, layout)) {
    SparseOp jump = ops.creation(l0) * ops.annihilation(l1);
    decay += SparseOp(jump.adjoint()) * jump;
    jumps.push_back(std::move(jump));
  }
  // H_eff = H - (i/2) Gamma sum_a L_a^dag L_a
  const SparseOp hs_eff = hs - cplx{0.0, 0.5 * gamma} * decay;

  // Product initial state.
  const Eigen::MatrixXcd c0 = restrict(initial.matrix(), config.modes());
  const Eigen::MatrixXcd off = c0 - Eigen::MatrixXcd(c0.diagonal().asDiagonal());
  if (off.size() && off.cwiseAbs().maxCoeff() > 1e-12)
    throw SpecError("exact_lindblad_evolve needs an initial state diagonal on the config modes");
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(ops.dimension(), ops.dimension());
  for (long s = 0; s < ops.dimension(); ++s) {
    double p = 1.0;
    for (int q = 0; q < n; ++q) {
      const double nq = c0(q, q).real();
      p *= ((static_cast<unsigned long>(s) >> q) & 1UL) ? nq : 1.0 - nq;
    }
    rho(s, s) = p;
  }

  const DriveSchedule& drive = model.drive;
  auto rhs = [&](double t, const Eigen::MatrixXcd& r, Eigen::MatrixXcd& out) {
    const auto d = drive(t);
    Eigen::MatrixXcd x = hs_eff * r;
    if (d.epsilon != 0.0) x += d.epsilon * (he * r);
    if (d.omega != 0.0) x += d.omega * (ho * r);
    // rho H_eff^dag = (H_eff rho)^dag because rho is Hermitian.
    out = cplx{0.0, -1.0} * (x - x.adjoint());
    for (const auto& jump : jumps) {
      // L rho L^dag = (L (L rho)^dag)^dag
      const Eigen::MatrixXcd lr = jump * r;
      out += gamma * (jump * lr.adjoint()).adjoint();
    }
  };

  const double norm = max_drive_weighted_norm(drive, t0, t1, sparse_row_sum_norm(hs_eff),
                                              sparse_row_sum_norm(he), sparse_row_sum_norm(ho));
  const double dt = settings.step_safety / std::max(norm, 1e-12);
  const auto breaks = knots_within(drive, t0, t1);
  const auto times = sample_times(t0, t1, settings.samples, breaks);

  LindbladResult res;
  res.times = times;
  res.occupations.resize(static_cast<Eigen::Index>(times.size()), n);
  auto record = [&](std::size_t i) {
    res.occupations.row(static_cast<Eigen::Index>(i)) = product_occupations(rho, n);
    res.max_trace_error = std::max(res.max_trace_error, std::abs(rho.trace() - cplx{1.0, 0.0}));
    res.max_hermiticity_error =
        std::max(res.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
  };
  record(0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    rho = integrate_rk4_matrix(std::move(rho), times[i - 1], times[i], dt, {}, rhs);
    record(i);
  }
  if (ops.dimension() <= 1024) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    res.final_min_eigenvalue = es.eigenvalues().minCoeff();
  } else {
    res.final_min_eigenvalue = std::nan("");
  }
  res.rho = std::move(rho);
  return res;
}

ClosureReport closure_error_report(const FockConfig& config, const CombinedRunSpec& spec,
                                   const CorrelationState& initial, double horizon,
                                   const OracleSettings& settings) {
  const auto exact = exact_lindblad_evolve(config, spec, initial, 0.0, horizon, settings);

  const ModelSpec model = spec.resolved_model();
  const ModeLayout layout = ModeLayout::of(model);
  const auto h = restricted_hamiltonian(model, config);
  const auto pairs = local_pairs(config, layout);
  const double gamma = spec.dissipation.gamma;
  const DriveSchedule& drive = model.drive;
  auto rhs = [&](double t, const Eigen::MatrixXcd& c, Eigen::MatrixXcd& out) {
    const Eigen::MatrixXcd hb = h.at(drive(t)).conjugate();
    const Eigen::MatrixXcd p = hb * c;
    out = cplx{0.0, 1.0} * (p - p.adjoint());
    add_dissipation(c, out, gamma, pairs);
  };
  const auto rows = [](const Eigen::MatrixXcd& m) {
    return m.cwiseAbs().rowwise().sum().maxCoeff();
  };
  const double norm =
      max_drive_weighted_norm(drive, 0.0, horizon, rows(h.fixed), rows(h.eps), rows(h.omega)) +
      gamma;
  const double dt = settings.step_safety / std::max(norm, 1e-12);

  ClosureReport rep;
  rep.times = exact.times;
  rep.exact = exact.occupations;
  rep.closed.resize(exact.occupations.rows(), exact.occupations.cols());
  Eigen::MatrixXcd c = restrict(initial.matrix(), config.modes());
  rep.closed.row(0) = c.diagonal().real().transpose();
  const auto breaks = knots_within(drive, 0.0, horizon);
  for (std::size_t i = 1; i < rep.times.size(); ++i) {
    std::vector<double> inner;
    for (double b : breaks)
      if (b > rep.times[i - 1] && b < rep.times[i]) inner.push_back(b);
    c = integrate_rk4_matrix(std::move(c), rep.times[i - 1], rep.times[i], dt, inner, rhs);
    rep.closed.row(static_cast<Eigen::Index>(i)) = c.diagonal().real().transpose();
  }
  const Eigen::MatrixXd gap = (rep.exact - rep.closed).cwiseAbs();
  for (Eigen::Index q = 0; q < gap.cols(); ++q) rep.per_mode_deviation.push_back(gap.col(q).maxCoeff());
  rep.max_deviation = gap.size() ? gap.maxCoeff() : 0.0;
  return rep;
}

}  // namespace fermiload
