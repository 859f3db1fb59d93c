#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fermiload::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 1,
  exit_numerical_failure = 2,
  exit_verify_failure = 3,
};

// Entry point of the `fermiload` tool; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fermiload::cli
