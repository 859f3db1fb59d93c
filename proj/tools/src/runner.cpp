#include "fermiload/cli/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fermiload/coherent.hpp"
#include "fermiload/errors.hpp"

namespace fermiload::cli {

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string num_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + num(xs[i]);
  return out;
}

std::string cell_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell_%04zu", index);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

Trajectory execute(const RunConfig& config, FaultInjection fault) {
  switch (config.kind) {
    case RunKind::fast_pulse: return run_fast_pulse(config.spec.model);
    case RunKind::slow_sweep: return run_slow_sweep(config.spec.model);
    case RunKind::coherent: return simulate_coherent(config.spec.model);
    case RunKind::combined: return run_combined(config.spec, fault);
  }
  throw SpecError("unknown run kind");
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::string out = "t,F0,F1,total_N,N_reservoir,herm_residual,min_eig,max_eig\n";
  out.reserve(out.size() + trajectory.samples.size() * 200);
  for (const auto& s : trajectory.samples) {
    for (double v : {s.t, s.f0, s.f1, s.total_number, s.reservoir_number, s.herm_residual}) {
      out += num(v);
      out += ',';
    }
    out += num(s.min_eig);
    out += ',';
    out += num(s.max_eig);
    out += '\n';
  }
  return out;
}

KeyValues result_meta(const RunConfig& config, const Trajectory& trajectory,
                      const std::vector<CheckResult>& checks) {
  KeyValues kv = config.resolved;
  const auto& last = trajectory.back();
  kv.set("result.final_F0", num(last.f0));
  kv.set("result.final_F1", num(last.f1));
  kv.set("result.final_time", num(last.t));
  kv.set("result.site_band0", num_list(last.site_band0));
  kv.set("result.site_band1", num_list(last.site_band1));
  kv.set("result.samples", std::to_string(trajectory.samples.size()));
  kv.set("result.steps", std::to_string(trajectory.steps));
  kv.set("result.dt_max", num(trajectory.dt_max));
  kv.set("result.max_trace_drift", num(trajectory.max_trace_drift));
  kv.set("result.max_pauli_violation", num(trajectory.max_pauli_violation));
  kv.set("result.max_step_decrease_f0", num(trajectory.max_step_decrease_f0));
  kv.set("result.max_step_decrease_time", num(trajectory.max_step_decrease_time));
  kv.set("result.max_gram_defect", num(trajectory.max_gram_defect));
  kv.set("result.closure_flagged", trajectory.closure_flagged ? "true" : "false");
  kv.set("result.warning_count", std::to_string(trajectory.warnings.size()));
  for (std::size_t i = 0; i < trajectory.warnings.size(); ++i)
    kv.set("result.warning_" + std::to_string(i + 1), trajectory.warnings[i]);
  for (const auto& c : checks)
    kv.set("check." + c.name, std::string(c.passed ? "pass " : "fail ") + num(c.value) + " < " + num(c.threshold));
  return kv;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunArtifacts run_experiment(const RunConfig& config, const std::filesystem::path& out_dir,
                            FaultInjection fault) {
  RunArtifacts a;
  a.trajectory = execute(config, fault);
  if (config.verify) a.checks = trajectory_checks(config, a.trajectory);
  a.csv = out_dir / (config.name + ".csv");
  a.meta = out_dir / (config.name + ".meta");
  write_file_atomic(a.csv, trajectory_csv(a.trajectory));
  write_file_atomic(a.meta, format_key_values(result_meta(config, a.trajectory, a.checks)));
  return a;
}

ScanReport run_scan(const RunConfig& config, const std::filesystem::path& out_dir, unsigned workers) {
  if (config.scan.empty()) throw ConfigError("configuration has no [scan] axes");
  // Every cell is resolved before any work starts, so a bad grid value fails fast.
  const auto cells = expand_scan(config);

  ScanReport report;
  report.total = cells.size();
  report.directory = out_dir / config.name;
  const auto cell_dir = report.directory / "cells";
  std::filesystem::create_directories(cell_dir);

  struct Outcome {
    bool ok{false};
    std::string reason;
    double f0{}, f1{};
  };
  std::vector<Outcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto& o = outcomes[i];
      try {
        auto cell = cells[i];
        cell.name = cell_stem(i);
        const auto a = run_experiment(cell, cell_dir);
        o.ok = true;
        o.f0 = a.trajectory.back().f0;
        o.f1 = a.trajectory.back().f1;
      } catch (const NumericalError& e) {
        o.reason = std::string("numerical failure: ") + e.what();
      } catch (const std::exception& e) {
        o.reason = std::string("error: ") + e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cells.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }

  std::string summary = "cell";
  for (const auto& axis : config.scan) summary += "," + csv_field(axis.key);
  summary += ",final_F0,final_F1\n";
  std::ostringstream manifest;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto values = scan_cell_values(config, i);
    if (!outcomes[i].ok) {
      report.missing.emplace_back(i, outcomes[i].reason);
      continue;
    }
    ++report.completed;
    std::vector<std::string> row{cell_stem(i)};
    row.insert(row.end(), values.begin(), values.end());
    row.push_back(num(outcomes[i].f0));
    row.push_back(num(outcomes[i].f1));
    for (std::size_t c = 0; c < row.size(); ++c) summary += (c ? "," : "") + csv_field(row[c]);
    summary += '\n';
    report.rows.push_back(std::move(row));
  }
  manifest << "[manifest]\n"
           << "name = " << config.name << '\n'
           << "cells_total = " << report.total << '\n'
           << "cells_completed = " << report.completed << '\n'
           << "cells_missing = " << report.missing.size() << '\n';
  if (!report.missing.empty()) {
    manifest << "\n[missing]\n";
    for (const auto& [i, reason] : report.missing) manifest << cell_stem(i) << " = " << reason << '\n';
  }
  write_file_atomic(report.directory / "summary.csv", summary);
  write_file_atomic(report.directory / "manifest.txt", manifest.str());
  write_file_atomic(report.directory / "scan.meta", format_key_values(config.resolved));
  return report;
}

std::string summary_line(const RunConfig& config, const Trajectory& trajectory) {
  const auto& s = trajectory.back();
  char buf[160];
  std::snprintf(buf, sizeof buf, ": final F0 = %.8f, final F1 = %.8f at t = %g (%ld steps)", s.f0, s.f1, s.t,
                trajectory.steps);
  return config.name + buf;
}

}  // namespace fermiload::cli
