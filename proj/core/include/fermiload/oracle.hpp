#pragma once

// Brute-force references for small instances: exact propagators for the
// coherent dynamics and dense Fock-space Lindblad evolution.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "fermiload/coherent.hpp"
#include "fermiload/combined.hpp"

namespace fermiload {

using SparseOp = Eigen::SparseMatrix<cplx>;

// Ordered subset of ModeLayout indices treated exactly in Fock space.
class FockConfig {
 public:
  static constexpr int max_modes = 12;

  explicit FockConfig(std::vector<int> modes);
  static FockConfig full(const ModeLayout& layout);

  const std::vector<int>& modes() const { return modes_; }
  int mode_count() const { return static_cast<int>(modes_.size()); }
  long dimension() const { return 1L << modes_.size(); }
  // Position of a layout index in the config, or -1.
  int local(int layout_index) const;

 private:
  std::vector<int> modes_;
};

// Jordan-Wigner operators on 2^n states; bit q of a basis index is n_q.
class FockOperators {
 public:
  explicit FockOperators(int modes);

  int modes() const { return modes_; }
  long dimension() const { return 1L << modes_; }
  const SparseOp& annihilation(int q) const { return c_[static_cast<std::size_t>(q)]; }
  SparseOp creation(int q) const { return SparseOp(annihilation(q).adjoint()); }
  // sum_ab h_ab c_a^dag c_b
  SparseOp quadratic(const Eigen::MatrixXcd& h) const;

 private:
  int modes_;
  std::vector<SparseOp> c_;
};

// U = exp(M dt) via the eigendecomposition of the Hermitian matrix i M.
// Throws SpecError if M is not anti-Hermitian.
Eigen::MatrixXcd propagator_oracle(const GeneratorMatrix& generator, double dt);

// C -> conj(U) C U^T, the exact image of C under the propagator U.
Eigen::MatrixXcd propagate_correlation(const Eigen::MatrixXcd& c, const Eigen::MatrixXcd& u);

// Coherent evolution by exact exponentiation on each piece of a schedule that
// is constant between its breakpoints, taking the value at the piece midpoint.
Eigen::MatrixXcd exact_piecewise_evolve(const Eigen::MatrixXcd& c, const ModelSpec& spec,
                                        double t0, double t1);

struct OracleSettings {
  double step_safety{0.02};
  int samples{101};
};

struct LindbladResult {
  std::vector<double> times;
  Eigen::MatrixXd occupations;  // samples x config modes
  Eigen::MatrixXcd rho;         // final density matrix
  double max_trace_error{0.0};
  double max_hermiticity_error{0.0};
  double final_min_eigenvalue{0.0};

  // Final-state moments in config-local indices.
  Eigen::MatrixXcd correlation(const FockOperators& ops) const;
  cplx quartic(const FockOperators& ops, int i, int j, int k, int l) const;
};

// Dense density-matrix RK4 of the master equation restricted to the config
// modes. The initial state is the product state given by the diagonal of
// `initial` on those modes; its off-diagonal entries there must vanish.
// Jump operators act on every site whose two bands are both in the config.
LindbladResult exact_lindblad_evolve(const FockConfig& config, const CombinedRunSpec& spec,
                                     const CorrelationState& initial, double t0, double t1,
                                     const OracleSettings& settings = {});

struct ClosureReport {
  std::vector<double> times;
  Eigen::MatrixXd exact;   // samples x config modes
  Eigen::MatrixXd closed;  // samples x config modes
  std::vector<double> per_mode_deviation;
  double max_deviation{0.0};
};

// Sup-norm gap between exact Lindblad occupations and the Wick-closed
// equations on the same restricted problem over [0, horizon].
ClosureReport closure_error_report(const FockConfig& config, const CombinedRunSpec& spec,
                                   const CorrelationState& initial, double horizon,
                                   const OracleSettings& settings = {});

}  // namespace fermiload
