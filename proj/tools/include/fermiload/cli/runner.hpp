#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fermiload/cli/config.hpp"
#include "fermiload/cli/verify.hpp"
#include "fermiload/combined.hpp"

namespace fermiload::cli {

// Dispatches on the run kind. Throws NumericalError if integration aborts.
Trajectory execute(const RunConfig& config, FaultInjection fault = {});

// Header t,F0,F1,total_N,N_reservoir,herm_residual,min_eig,max_eig; values
// with 17 significant digits, NaN written as "nan".
std::string trajectory_csv(const Trajectory& trajectory);

// Resolved configuration plus a [result] section (and [check] when given).
KeyValues result_meta(const RunConfig& config, const Trajectory& trajectory,
                      const std::vector<CheckResult>& checks = {});

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

struct RunArtifacts {
  std::filesystem::path csv;
  std::filesystem::path meta;
  Trajectory trajectory;
  std::vector<CheckResult> checks;  // populated when config.verify is set
};

// <out_dir>/<name>.csv and <out_dir>/<name>.meta.
RunArtifacts run_experiment(const RunConfig& config, const std::filesystem::path& out_dir,
                            FaultInjection fault = {});

struct ScanReport {
  std::size_t total{0};
  std::size_t completed{0};
  std::vector<std::pair<std::size_t, std::string>> missing;  // cell index, reason
  std::vector<std::vector<std::string>> rows;                // summary rows of completed cells
  std::filesystem::path directory;
};

// Runs every cell with up to `workers` threads. Writes
// <out_dir>/<name>/cells/cell_NNNN.{csv,meta}, summary.csv and manifest.txt.
// Cells that fail are listed in the manifest; the others are kept.
ScanReport run_scan(const RunConfig& config, const std::filesystem::path& out_dir, unsigned workers);

// "name: final F0 = ..., final F1 = ..." for the console.
std::string summary_line(const RunConfig& config, const Trajectory& trajectory);

}  // namespace fermiload::cli
