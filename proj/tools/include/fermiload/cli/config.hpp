#pragma once

// Line-oriented run configuration:
//
//   # comment
//   preset = fig5a          (keys before any header: bare or section.key)
//   [lattice]
//   omega = 5
//
// Every key is checked against a fixed schema; unknown keys, malformed
// values and missing required parameters are reported with the key name.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fermiload/combined.hpp"

namespace fermiload::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered "section.key" -> value map. Later assignments replace earlier ones in place.
class KeyValues {
 public:
  void set(const std::string& key, std::string value);
  std::optional<std::string> get(const std::string& key) const;
  bool contains(const std::string& key) const { return get(key).has_value(); }
  void erase(const std::string& key);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  // Applies every entry of `other` on top of this one.
  void merge(const KeyValues& other);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Syntax pass only: headers, key=value lines, comments, section qualification,
// schema membership. `origin` names the source in error messages.
KeyValues parse_key_values(std::string_view text, std::string_view origin = "<config>");

// Same format, grouped by section in schema order; [scan] entries keep their order.
std::string format_key_values(const KeyValues& kv);

enum class RunKind { fast_pulse, slow_sweep, coherent, combined };
std::string_view to_string(RunKind kind);

struct ScanAxis {
  std::string key;  // section.key
  std::vector<std::string> values;
};

struct RunConfig {
  std::string name;
  std::string preset;
  std::string caption;
  RunKind kind{RunKind::coherent};
  CombinedRunSpec spec;  // dissipation and removal are inert unless kind == combined
  std::vector<ScanAxis> scan;
  std::string output_dir;
  bool verify{false};
  // Every input parameter with defaults filled in, plus a [derived] section.
  KeyValues resolved;

  std::size_t scan_cells() const;
};

// Directory holding the shipped preset files (<name>.cfg). Honours the
// FERMILOAD_PRESET_DIR environment variable.
std::filesystem::path default_preset_dir();

class PresetCatalog {
 public:
  explicit PresetCatalog(std::filesystem::path dir = default_preset_dir());

  std::vector<std::string> names() const;
  // Raw file contents; ConfigError if the preset does not exist.
  std::string text(const std::string& name) const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// Parses, expands `run.preset` (user keys override the preset's), and resolves.
RunConfig parse_config(std::string_view text, const PresetCatalog& presets,
                       std::string_view origin = "<config>");
// Same, starting from already parsed user key/values.
RunConfig parse_config(const KeyValues& user, const PresetCatalog& presets);

// Semantic pass on fully merged key/values.
RunConfig resolve_config(const KeyValues& kv);

// One configuration per scan cell in row-major order over the axes (the last
// axis varies fastest). Cells carry no scan axes of their own.
std::vector<RunConfig> expand_scan(const RunConfig& config);
// Axis values of cell `index`, in axis order.
std::vector<std::string> scan_cell_values(const RunConfig& config, std::size_t index);

// Multiplies integrator.dt_scale, re-resolving so the change is echoed.
RunConfig with_dt_scale(const RunConfig& config, double factor);

// Human-readable schema listing for `explain` and error messages.
std::string describe_schema();

}  // namespace fermiload::cli
