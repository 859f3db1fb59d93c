#pragma once

#include <string>
#include <vector>

#include "fermiload/cli/config.hpp"
#include "fermiload/combined.hpp"

namespace fermiload::cli {

struct CheckResult {
  std::string name;
  bool passed{false};
  double value{};      // measured quantity
  double threshold{};  // bound it is compared against
  std::string detail;
};

// Invariant and oracle checks on small instances. The fault hook is forwarded
// to every combined-dynamics check.
std::vector<CheckResult> verify_suite(FaultInjection fault = {});

// Invariants of a finished run: Hermiticity, trace drift per unit time, Pauli
// bounds, and for combined runs monotone F0 and the closure flag.
std::vector<CheckResult> trajectory_checks(const RunConfig& config, const Trajectory& trajectory);

// Isolated excited site at rate gamma: exact e^{-gamma t}, integrated closed
// equations, and the closed form 1/(1 + gamma t), as CSV text.
std::string closure_table(double gamma = 1.0, double horizon = 10.0, int rows = 41);

// One "PASS|FAIL name value (bound) detail" line per check.
std::string format_checks(const std::vector<CheckResult>& checks);
bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace fermiload::cli
