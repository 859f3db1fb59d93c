#include "fermiload/cli/app.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fermiload/cli/config.hpp"
#include "fermiload/cli/runner.hpp"
#include "fermiload/cli/verify.hpp"
#include "fermiload/errors.hpp"

namespace fermiload::cli {

namespace {

struct ConfigSource {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::string out_dir;
  double dt_scale{1.0};
};

void add_source_options(CLI::App* cmd, ConfigSource& src) {
  cmd->add_option("--config", src.config_path, "configuration file");
  cmd->add_option("--preset", src.preset, "start from a shipped preset");
  cmd->add_option("--set", src.overrides, "override as section.key=value (repeatable)");
  cmd->add_option("--out", src.out_dir, "output directory (overrides run.output)");
  cmd->add_option("--dt-scale", src.dt_scale, "multiply the integrator step");
}

RunConfig load(const ConfigSource& src, const PresetCatalog& presets) {
  KeyValues user;
  if (!src.config_path.empty()) {
    std::ifstream in(src.config_path);
    if (!in) throw ConfigError("cannot read config file '" + src.config_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    user = parse_key_values(ss.str(), src.config_path);
  }
  if (!src.preset.empty()) {
    if (user.contains("run.preset") && *user.get("run.preset") != src.preset)
      throw ConfigError("--preset " + src.preset + " conflicts with run.preset in " + src.config_path);
    user.set("run.preset", src.preset);
  }
  std::string sets;
  for (const auto& s : src.overrides) sets += s + "\n";
  user.merge(parse_key_values(sets, "--set"));
  auto config = parse_config(user, presets);
  if (src.dt_scale != 1.0) config = with_dt_scale(config, src.dt_scale);
  if (!src.out_dir.empty()) config.output_dir = src.out_dir;
  return config;
}

void print_warnings(const Trajectory& t, std::ostream& err) {
  for (const auto& w : t.warnings) err << "warning: " << w << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dissipative loading of fermions into an optical lattice", "fermiload"};
  app.require_subcommand(1);

  ConfigSource run_src;
  auto* run_cmd = app.add_subcommand("run", "run one configuration, write <out>/<name>.csv and .meta");
  add_source_options(run_cmd, run_src);

  ConfigSource scan_src;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  auto* scan_cmd = app.add_subcommand("scan", "run every cell of the [scan] grid");
  add_source_options(scan_cmd, scan_src);
  scan_cmd->add_option("--workers", workers, "concurrent cells")->check(CLI::PositiveNumber);

  std::string verify_what;
  bool inject_fault = false;
  auto* verify_cmd = app.add_subcommand("verify", "invariant and oracle suite on small instances");
  verify_cmd->add_option("what", verify_what, "'closure' prints the closure comparison table")
      ->check(CLI::IsMember({"closure"}));
  verify_cmd->add_flag("--inject-fault", inject_fault, "flip the dissipative sign (negative test)");

  auto* presets_cmd = app.add_subcommand("presets", "list shipped presets");

  std::string explain_name;
  auto* explain_cmd = app.add_subcommand("explain", "print the resolved configuration of a preset");
  explain_cmd->add_option("preset", explain_name, "preset name")->required();

  app.add_subcommand("schema", "list every configuration key");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config_error;
  }

  const PresetCatalog presets;
  try {
    if (*run_cmd) {
      const auto config = load(run_src, presets);
      if (!config.scan.empty())
        throw ConfigError("configuration defines [scan] axes; use the scan verb");
      const auto a = run_experiment(config, config.output_dir);
      print_warnings(a.trajectory, err);
      out << summary_line(config, a.trajectory) << '\n' << "wrote " << a.csv.string() << '\n';
      if (!a.checks.empty()) {
        out << format_checks(a.checks);
        if (!all_passed(a.checks)) return exit_verify_failure;
      }
      return exit_ok;
    }
    if (*scan_cmd) {
      const auto config = load(scan_src, presets);
      const auto report = run_scan(config, config.output_dir, workers);
      for (const auto& row : report.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "  " : "") << row[i];
        out << '\n';
      }
      out << config.name << ": " << report.completed << "/" << report.total << " cells, wrote "
          << report.directory.string() << '\n';
      for (const auto& [i, reason] : report.missing) err << "cell " << i << ": " << reason << '\n';
      return report.missing.empty() ? exit_ok : exit_numerical_failure;
    }
    if (*verify_cmd) {
      if (verify_what == "closure") {
        out << closure_table();
        return exit_ok;
      }
      const auto checks = verify_suite(FaultInjection{inject_fault});
      out << format_checks(checks);
      return all_passed(checks) ? exit_ok : exit_verify_failure;
    }
    if (*presets_cmd) {
      for (const auto& name : presets.names()) {
        const auto kv = parse_key_values(presets.text(name), name);
        out << name << "  " << kv.get("run.caption").value_or("") << '\n';
      }
      return exit_ok;
    }
    if (*explain_cmd) {
      const auto config = parse_config("run.preset = " + explain_name + "\n", presets, "explain");
      out << format_key_values(config.resolved);
      return exit_ok;
    }
    out << describe_schema();
    return exit_ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const SpecError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numerical_failure;
  }
}

}  // namespace fermiload::cli
