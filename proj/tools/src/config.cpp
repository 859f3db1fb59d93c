#include "fermiload/cli/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fermiload/errors.hpp"

#ifndef FERMILOAD_PRESET_DIR
#define FERMILOAD_PRESET_DIR "presets"
#endif

namespace fermiload::cli {

namespace {

enum class Type { integer, real, boolean, text, choice, real_list, knots };

struct KeyDef {
  std::string_view section;
  std::string_view key;
  Type type;
  std::string_view choices;  // '|'-separated, choice keys only
  std::string_view help;
};

// Schema order is also the output order of resolved configurations.
constexpr std::array kSchema{
    KeyDef{"run", "preset", Type::text, "", "preset file to start from"},
    KeyDef{"run", "name", Type::text, "", "run name, used for output files"},
    KeyDef{"run", "caption", Type::text, "", "free-text description kept in metadata"},
    KeyDef{"run", "kind", Type::choice, "fast_pulse|slow_sweep|coherent|combined", "runner"},
    KeyDef{"run", "samples", Type::integer, "", "trajectory samples (default 400)"},
    KeyDef{"run", "output", Type::text, "", "output directory (default out)"},
    KeyDef{"run", "verify", Type::boolean, "", "check run invariants afterwards (default false)"},
    KeyDef{"reservoir", "particles", Type::integer, "", "N, filled reservoir modes"},
    KeyDef{"reservoir", "modes", Type::integer, "", "K, odd momentum-grid size >= N"},
    KeyDef{"lattice", "sites", Type::integer, "", "M"},
    KeyDef{"lattice", "omega", Type::real, "", "trap frequency omega / eps_F"},
    KeyDef{"lattice", "density_a0", Type::real, "", "n_1D a_0, sets omega"},
    KeyDef{"lattice", "spacing", Type::real, "", "site spacing lambda/2 in code units"},
    KeyDef{"lattice", "density_spacing", Type::real, "", "n_1D lambda/2, sets the spacing"},
    KeyDef{"lattice", "recoil_ratio", Type::real, "", "omega / omega_R, sets the spacing"},
    KeyDef{"lattice", "offsets", Type::real_list, "", "per-site energy offsets (default 0)"},
    KeyDef{"drive", "profile", Type::choice, "constant|sweep|knots", "drive shape"},
    KeyDef{"drive", "rabi", Type::real, "", "constant: Rabi amplitude Omega"},
    KeyDef{"drive", "epsilon", Type::real, "", "constant: resonant energy eps"},
    KeyDef{"drive", "duration", Type::real, "", "constant, sweep: duration"},
    KeyDef{"drive", "pulse_area", Type::real, "", "constant: duration in units of pi / Omega"},
    KeyDef{"drive", "epsilon_from", Type::real, "", "sweep: initial eps"},
    KeyDef{"drive", "epsilon_to", Type::real, "", "sweep: final eps"},
    KeyDef{"drive", "rabi_max", Type::real, "", "sweep: plateau Omega"},
    KeyDef{"drive", "rabi_ramp", Type::real, "", "sweep: time Omega reaches rabi_max (0: no ramp)"},
    KeyDef{"drive", "rabi_knots", Type::knots, "", "knots: t:Omega pairs"},
    KeyDef{"drive", "epsilon_knots", Type::knots, "", "knots: t:eps pairs"},
    KeyDef{"dissipation", "gamma", Type::real, "", "on-site cooling rate Gamma"},
    KeyDef{"dissipation", "mode", Type::choice, "diagonal|envelope", "off-diagonal rates"},
    KeyDef{"dissipation", "envelope_ratio", Type::real, "", "omega / omega_R for envelope mode"},
    KeyDef{"removal", "enabled", Type::boolean, "", "append the removal stage"},
    KeyDef{"removal", "target_epsilon", Type::real, "", "eps ramp target, above eps_F"},
    KeyDef{"removal", "ramp_duration", Type::real, "", "eps ramp duration (0: skip)"},
    KeyDef{"removal", "switch_off_duration", Type::real, "", "Omega switch-off duration"},
    KeyDef{"integrator", "step_safety", Type::real, "", "dt <= step_safety / ||h|| (default 0.5)"},
    KeyDef{"integrator", "min_steps", Type::integer, "", "dt <= T / min_steps (default 4000)"},
    KeyDef{"integrator", "dt_scale", Type::real, "", "step multiplier (default 1)"},
    KeyDef{"integrator", "eigen_diagnostics", Type::boolean, "",
           "eigenvalue bounds at every sample (default true)"},
    KeyDef{"units", "trap_frequency_khz", Type::real, "",
           "omega / 2 pi in kHz, enables physical-unit echoes"},
};

constexpr std::array<std::string_view, 10> kSectionOrder{
    "run", "reservoir", "lattice", "drive", "dissipation", "removal", "integrator", "units", "scan",
    "derived"};

const KeyDef* find_key(std::string_view qualified) {
  for (const auto& d : kSchema) {
    if (qualified.size() == d.section.size() + 1 + d.key.size() &&
        qualified.substr(0, d.section.size()) == d.section && qualified[d.section.size()] == '.' &&
        qualified.substr(d.section.size() + 1) == d.key)
      return &d;
  }
  return nullptr;
}

std::string qualified(const KeyDef& d) { return std::string(d.section) + "." + std::string(d.key); }

bool is_section(std::string_view s) {
  return std::any_of(kSchema.begin(), kSchema.end(), [&](const KeyDef& d) { return d.section == s; });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Qualifies a bare key by unique name lookup.
std::string resolve_bare(const std::string& key, std::string_view where) {
  std::vector<std::string> hits;
  for (const auto& d : kSchema)
    if (d.key == key) hits.push_back(qualified(d));
  if (hits.size() == 1) return hits.front();
  std::ostringstream msg;
  msg << where << ": ";
  if (hits.empty()) {
    msg << "unknown key '" << key << "'";
  } else {
    msg << "ambiguous key '" << key << "', use one of";
    for (const auto& h : hits) msg << ' ' << h;
  }
  throw ConfigError(msg.str());
}

double parse_real(const std::string& key, const std::string& v) {
  double x{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (v.empty() || ec != std::errc{} || ptr != end || !std::isfinite(x))
    throw ConfigError("key '" + key + "': malformed number '" + v + "'");
  return x;
}

long parse_integer(const std::string& key, const std::string& v) {
  long x{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (v.empty() || ec != std::errc{} || ptr != end)
    throw ConfigError("key '" + key + "': malformed integer '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(parse_real(key, item));
  return out;
}

std::vector<PiecewiseLinear::Knot> parse_knots(const std::string& key, const std::string& v) {
  std::vector<PiecewiseLinear::Knot> out;
  for (const auto& item : split(v, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2)
      throw ConfigError("key '" + key + "': knot '" + item + "' is not of the form t:value");
    out.push_back({parse_real(key, parts[0]), parse_real(key, parts[1])});
  }
  return out;
}

void check_value(const KeyDef& d, const std::string& key, const std::string& v) {
  switch (d.type) {
    case Type::integer: parse_integer(key, v); break;
    case Type::real: parse_real(key, v); break;
    case Type::boolean: parse_bool(key, v); break;
    case Type::real_list: parse_real_list(key, v); break;
    case Type::knots: parse_knots(key, v); break;
    case Type::choice: {
      const auto options = split(d.choices, '|');
      if (std::find(options.begin(), options.end(), v) == options.end())
        throw ConfigError("key '" + key + "': expected one of " + std::string(d.choices) +
                          ", got '" + v + "'");
      break;
    }
    case Type::text: break;
  }
}

std::string fmt(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + fmt(xs[i]);
  return out;
}

std::string fmt_knots(std::span<const PiecewiseLinear::Knot> ks) {
  std::string out;
  for (std::size_t i = 0; i < ks.size(); ++i)
    out += (i ? ", " : "") + fmt(ks[i].t) + ":" + fmt(ks[i].value);
  return out;
}

// Reads typed values from merged key/values and records what was consumed.
class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  bool has(const std::string& key) const { return kv_.contains(key); }

  std::optional<double> real(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    return parse_real(key, *v);
  }
  std::optional<long> integer(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    return parse_integer(key, *v);
  }
  std::optional<bool> boolean(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    return parse_bool(key, *v);
  }
  std::optional<std::string> text(const std::string& key) { return raw(key); }

  void require(const std::string& key) {
    if (!has(key)) missing_.push_back(key);
  }
  void require_one_of(std::initializer_list<std::string> keys) {
    int count = 0;
    std::string names;
    for (const auto& k : keys) {
      count += has(k) ? 1 : 0;
      names += (names.empty() ? "" : " | ") + k;
    }
    if (count == 0) missing_.push_back(names);
    if (count > 1) throw ConfigError("keys " + names + " are mutually exclusive; give exactly one");
  }
  // Keys that must not be present under the current choices.
  void forbid(std::initializer_list<std::string> keys, const std::string& reason) {
    for (const auto& k : keys)
      if (has(k)) throw ConfigError("key '" + k + "' is not used " + reason);
  }
  void throw_if_missing() const {
    if (missing_.empty()) return;
    std::string msg = "missing required keys:";
    for (const auto& m : missing_) msg += "\n  " + m;
    throw ConfigError(msg);
  }

 private:
  std::optional<std::string> raw(const std::string& key) const { return kv_.get(key); }

  const KeyValues& kv_;
  std::vector<std::string> missing_;
};

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError("key '" + key + "': must be > 0 (got " + fmt(v) + ")");
  return v;
}

double non_negative(const std::string& key, double v) {
  if (!(v >= 0.0)) throw ConfigError("key '" + key + "': must be >= 0 (got " + fmt(v) + ")");
  return v;
}

RunKind parse_kind(const std::string& v) {
  if (v == "fast_pulse") return RunKind::fast_pulse;
  if (v == "slow_sweep") return RunKind::slow_sweep;
  if (v == "coherent") return RunKind::coherent;
  return RunKind::combined;
}

}  // namespace

void KeyValues::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = std::move(value);
      return;
    }
  entries_.emplace_back(key, std::move(value));
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

void KeyValues::erase(const std::string& key) {
  std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [k, v] : other.entries_) set(k, v);
}

KeyValues parse_key_values(std::string_view text, std::string_view origin) {
  KeyValues kv;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section == "derived" || section == "result")
        throw ConfigError(where + ": section [" + section + "] is output-only");
      if (section != "scan" && !is_section(section))
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value, got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = unquote(trim(std::string_view(line).substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + ": empty key");

    std::string full;
    if (section.empty() || section == "scan") {
      full = key.find('.') == std::string::npos ? resolve_bare(key, where) : key;
      if (!find_key(full)) throw ConfigError(where + ": unknown key '" + key + "'");
    } else {
      if (key.find('.') != std::string::npos)
        throw ConfigError(where + ": qualified key '" + key + "' inside [" + section + "]");
      full = section + "." + key;
      if (!find_key(full)) throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    }

    if (section == "scan") {
      if (full.rfind("run.", 0) == 0 && full != "run.samples")
        throw ConfigError(where + ": '" + full + "' cannot be scanned");
      const auto& def = *find_key(full);
      const auto values = def.type == Type::real_list || def.type == Type::knots
                              ? split(value, ';')
                              : split(value, ',');
      for (const auto& v : values) check_value(def, full, v);
      kv.set("scan." + full, value);
    } else {
      check_value(*find_key(full), full, value);
      kv.set(full, value);
    }
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
  std::vector<std::string> extra_sections;
  for (const auto& [k, v] : kv.entries()) {
    const auto dot = k.find('.');
    const std::string sec = k.substr(0, dot);
    if (std::find(kSectionOrder.begin(), kSectionOrder.end(), sec) == kSectionOrder.end() &&
        std::find(extra_sections.begin(), extra_sections.end(), sec) == extra_sections.end())
      extra_sections.push_back(sec);
    by_section[sec].emplace_back(k.substr(dot + 1), v);
  }
  auto rank = [](const std::string& sec, const std::string& key) {
    for (std::size_t i = 0; i < kSchema.size(); ++i)
      if (kSchema[i].section == sec && kSchema[i].key == key) return i;
    return kSchema.size();
  };
  std::ostringstream out;
  bool first = true;
  auto emit = [&](const std::string& sec) {
    auto it = by_section.find(sec);
    if (it == by_section.end()) return;
    auto entries = it->second;
    std::stable_sort(entries.begin(), entries.end(), [&](const auto& a, const auto& b) {
      return rank(sec, a.first) < rank(sec, b.first);
    });
    out << (first ? "" : "\n") << '[' << sec << "]\n";
    first = false;
    for (const auto& [k, v] : entries) {
      const bool quote = v.find_first_of("#;") != std::string::npos || (!v.empty() && (v.front() == ' ' || v.back() == ' '));
      out << k << " = " << (quote ? "\"" + v + "\"" : v) << '\n';
    }
  };
  for (auto sec : kSectionOrder) emit(std::string(sec));
  for (const auto& sec : extra_sections) emit(sec);
  return out.str();
}

std::string_view to_string(RunKind kind) {
  switch (kind) {
    case RunKind::fast_pulse: return "fast_pulse";
    case RunKind::slow_sweep: return "slow_sweep";
    case RunKind::coherent: return "coherent";
    case RunKind::combined: return "combined";
  }
  return "coherent";
}

std::size_t RunConfig::scan_cells() const {
  std::size_t n = 1;
  for (const auto& a : scan) n *= a.values.size();
  return n;
}

std::filesystem::path default_preset_dir() {
  if (const char* env = std::getenv("FERMILOAD_PRESET_DIR"); env && *env) return env;
  return FERMILOAD_PRESET_DIR;
}

PresetCatalog::PresetCatalog(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::vector<std::string> PresetCatalog::names() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir_, ec))
    if (e.path().extension() == ".cfg") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string PresetCatalog::text(const std::string& name) const {
  const auto valid = std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
  const auto path = dir_ / (name + ".cfg");
  std::ifstream in(path);
  if (!valid || name.empty() || !in) {
    std::string msg = "key 'run.preset': unknown preset '" + name + "' (available:";
    for (const auto& n : names()) msg += " " + n;
    throw ConfigError(msg + ")");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_config(std::string_view text, const PresetCatalog& presets, std::string_view origin) {
  return parse_config(parse_key_values(text, origin), presets);
}

RunConfig parse_config(const KeyValues& user, const PresetCatalog& presets) {
  KeyValues merged;
  if (auto preset = user.get("run.preset")) {
    const auto path = (presets.directory() / (*preset + ".cfg")).string();
    merged = parse_key_values(presets.text(*preset), path);
    if (merged.contains("run.preset")) throw ConfigError(path + ": presets cannot name another preset");
  }
  merged.merge(user);
  return resolve_config(merged);
}

RunConfig resolve_config(const KeyValues& kv) {
  Reader r(kv);
  RunConfig cfg;
  KeyValues out;

  r.require("run.kind");
  r.require("reservoir.particles");
  r.require("reservoir.modes");
  r.require("lattice.sites");
  r.require_one_of({"lattice.omega", "lattice.density_a0"});
  r.require_one_of({"lattice.spacing", "lattice.density_spacing", "lattice.recoil_ratio"});
  r.require("drive.profile");
  const auto kind_text = r.text("run.kind");
  const auto profile = r.text("drive.profile");
  if (profile == "constant") {
    r.require("drive.rabi");
    r.require("drive.epsilon");
    r.require_one_of({"drive.duration", "drive.pulse_area"});
  } else if (profile == "sweep") {
    for (const char* k : {"drive.epsilon_from", "drive.epsilon_to", "drive.duration", "drive.rabi_max"})
      r.require(k);
  } else if (profile == "knots") {
    r.require("drive.rabi_knots");
    r.require("drive.epsilon_knots");
  }
  const bool combined = kind_text == "combined";
  if (combined) r.require("dissipation.gamma");
  const bool removal = combined && r.boolean("removal.enabled").value_or(false);
  if (removal)
    for (const char* k : {"removal.target_epsilon", "removal.ramp_duration", "removal.switch_off_duration"})
      r.require(k);
  r.throw_if_missing();

  // run
  cfg.kind = parse_kind(*kind_text);
  cfg.preset = r.text("run.preset").value_or("");
  cfg.name = r.text("run.name").value_or(cfg.preset.empty() ? "run" : cfg.preset);
  cfg.caption = r.text("run.caption").value_or("");
  cfg.output_dir = r.text("run.output").value_or("out");
  cfg.verify = r.boolean("run.verify").value_or(false);
  const long samples = r.integer("run.samples").value_or(400);
  if (samples < 2) throw ConfigError("key 'run.samples': must be >= 2 (got " + std::to_string(samples) + ")");
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("key 'run.name': must be a non-empty file name");
  if (!cfg.preset.empty()) out.set("run.preset", cfg.preset);
  out.set("run.name", cfg.name);
  out.set("run.caption", cfg.caption);
  out.set("run.kind", std::string(to_string(cfg.kind)));
  out.set("run.samples", std::to_string(samples));
  out.set("run.output", cfg.output_dir);
  out.set("run.verify", cfg.verify ? "true" : "false");

  // reservoir: eps_F = 1 fixes L = pi N / sqrt(2)
  ModelSpec& m = cfg.spec.model;
  const long particles = *r.integer("reservoir.particles");
  const long modes = *r.integer("reservoir.modes");
  if (particles < 1) throw ConfigError("key 'reservoir.particles': must be >= 1");
  if (modes < particles) throw ConfigError("key 'reservoir.modes': must be >= reservoir.particles");
  if (modes % 2 == 0) throw ConfigError("key 'reservoir.modes': must be odd (symmetric momentum grid)");
  m.reservoir = ReservoirSpec::unit_fermi_energy(static_cast<int>(particles), static_cast<int>(modes));
  out.set("reservoir.particles", std::to_string(particles));
  out.set("reservoir.modes", std::to_string(modes));
  const double density = m.reservoir.density();

  // lattice
  const long sites = *r.integer("lattice.sites");
  if (sites < 1) throw ConfigError("key 'lattice.sites': must be >= 1");
  m.lattice.site_count = static_cast<int>(sites);
  out.set("lattice.sites", std::to_string(sites));
  if (auto w = r.real("lattice.omega")) {
    m.lattice.trap_frequency = positive("lattice.omega", *w);
    out.set("lattice.omega", fmt(*w));
  } else {
    const double na0 = positive("lattice.density_a0", *r.real("lattice.density_a0"));
    const double a0 = na0 / density;
    m.lattice.trap_frequency = 1.0 / (a0 * a0);
    out.set("lattice.density_a0", fmt(na0));
  }
  if (auto d = r.real("lattice.spacing")) {
    m.lattice.site_spacing = positive("lattice.spacing", *d);
    out.set("lattice.spacing", fmt(*d));
  } else if (auto nd = r.real("lattice.density_spacing")) {
    m.lattice.site_spacing = positive("lattice.density_spacing", *nd) / density;
    out.set("lattice.density_spacing", fmt(*nd));
  } else {
    // omega_R = pi^2 / (2 d^2) = omega / ratio
    const double ratio = positive("lattice.recoil_ratio", *r.real("lattice.recoil_ratio"));
    m.lattice.site_spacing = kPi / std::sqrt(2.0 * m.lattice.trap_frequency / ratio);
    out.set("lattice.recoil_ratio", fmt(ratio));
  }
  if (auto offs = r.text("lattice.offsets")) {
    m.lattice.site_offsets = parse_real_list("lattice.offsets", *offs);
    if (static_cast<long>(m.lattice.site_offsets.size()) != sites)
      throw ConfigError("key 'lattice.offsets': needs exactly lattice.sites = " + std::to_string(sites) +
                        " values");
  }
  out.set("lattice.offsets",
          fmt_list(m.lattice.site_offsets.empty() ? std::vector<double>(static_cast<std::size_t>(sites), 0.0)
                                                  : m.lattice.site_offsets));

  // drive
  out.set("drive.profile", *profile);
  try {
    if (profile == "constant") {
      r.forbid({"drive.epsilon_from", "drive.epsilon_to", "drive.rabi_max", "drive.rabi_ramp",
                "drive.rabi_knots", "drive.epsilon_knots"},
               "with drive.profile = constant");
      const double rabi = non_negative("drive.rabi", *r.real("drive.rabi"));
      const double eps = *r.real("drive.epsilon");
      double duration{};
      if (auto d = r.real("drive.duration")) {
        duration = positive("drive.duration", *d);
        out.set("drive.duration", fmt(duration));
      } else {
        const double area = positive("drive.pulse_area", *r.real("drive.pulse_area"));
        duration = area * kPi / positive("drive.rabi", rabi);
        out.set("drive.pulse_area", fmt(area));
      }
      m.drive = DriveSchedule::constant(rabi, eps, duration);
      out.set("drive.rabi", fmt(rabi));
      out.set("drive.epsilon", fmt(eps));
    } else if (profile == "sweep") {
      r.forbid({"drive.rabi", "drive.epsilon", "drive.pulse_area", "drive.rabi_knots", "drive.epsilon_knots"},
               "with drive.profile = sweep");
      const double from = *r.real("drive.epsilon_from");
      const double to = *r.real("drive.epsilon_to");
      const double duration = positive("drive.duration", *r.real("drive.duration"));
      const double rabi = non_negative("drive.rabi_max", *r.real("drive.rabi_max"));
      const double ramp = non_negative("drive.rabi_ramp", r.real("drive.rabi_ramp").value_or(0.0));
      m.drive = DriveSchedule::linear_sweep(from, to, duration, rabi, ramp);
      out.set("drive.epsilon_from", fmt(from));
      out.set("drive.epsilon_to", fmt(to));
      out.set("drive.duration", fmt(duration));
      out.set("drive.rabi_max", fmt(rabi));
      out.set("drive.rabi_ramp", fmt(ramp));
    } else {
      r.forbid({"drive.rabi", "drive.epsilon", "drive.duration", "drive.pulse_area", "drive.epsilon_from",
                "drive.epsilon_to", "drive.rabi_max", "drive.rabi_ramp"},
               "with drive.profile = knots");
      const auto rk = parse_knots("drive.rabi_knots", *r.text("drive.rabi_knots"));
      const auto ek = parse_knots("drive.epsilon_knots", *r.text("drive.epsilon_knots"));
      m.drive = DriveSchedule(PiecewiseLinear(rk), PiecewiseLinear(ek));
      out.set("drive.rabi_knots", fmt_knots(rk));
      out.set("drive.epsilon_knots", fmt_knots(ek));
    }
  } catch (const SpecError& e) {
    throw ConfigError(std::string("[drive]: ") + e.what());
  }

  // dissipation and removal
  if (!combined) {
    r.forbid({"dissipation.gamma", "dissipation.mode", "dissipation.envelope_ratio", "removal.enabled",
              "removal.target_epsilon", "removal.ramp_duration", "removal.switch_off_duration"},
             "unless run.kind = combined");
  } else {
    auto& d = cfg.spec.dissipation;
    d.gamma = non_negative("dissipation.gamma", *r.real("dissipation.gamma"));
    const auto mode = r.text("dissipation.mode").value_or("diagonal");
    d.offdiag_mode = mode == "envelope" ? OffDiagonalMode::envelope : OffDiagonalMode::diagonal;
    if (d.offdiag_mode == OffDiagonalMode::envelope)
      throw ConfigError("key 'dissipation.mode': combined runs support only diagonal dissipation");
    r.forbid({"dissipation.envelope_ratio"}, "with dissipation.mode = diagonal");
    out.set("dissipation.gamma", fmt(d.gamma));
    out.set("dissipation.mode", mode);

    auto& rm = cfg.spec.removal;
    rm.enabled = removal;
    out.set("removal.enabled", removal ? "true" : "false");
    if (removal) {
      rm.target_epsilon = *r.real("removal.target_epsilon");
      rm.ramp_duration = non_negative("removal.ramp_duration", *r.real("removal.ramp_duration"));
      rm.switch_off_duration =
          non_negative("removal.switch_off_duration", *r.real("removal.switch_off_duration"));
      if (!(rm.target_epsilon > m.reservoir.fermi_energy()))
        throw ConfigError("key 'removal.target_epsilon': must lie above eps_F = 1");
      out.set("removal.target_epsilon", fmt(rm.target_epsilon));
      out.set("removal.ramp_duration", fmt(rm.ramp_duration));
      out.set("removal.switch_off_duration", fmt(rm.switch_off_duration));
    } else {
      r.forbid({"removal.target_epsilon", "removal.ramp_duration", "removal.switch_off_duration"},
               "with removal.enabled = false");
    }
  }

  // integrator
  auto& in = m.integrator;
  in.step_safety = positive("integrator.step_safety", r.real("integrator.step_safety").value_or(0.5));
  const long min_steps = r.integer("integrator.min_steps").value_or(4000);
  if (min_steps < 1) throw ConfigError("key 'integrator.min_steps': must be >= 1");
  in.min_steps = static_cast<int>(min_steps);
  in.dt_scale = positive("integrator.dt_scale", r.real("integrator.dt_scale").value_or(1.0));
  in.eigen_diagnostics = r.boolean("integrator.eigen_diagnostics").value_or(true);
  in.samples = static_cast<int>(samples);
  out.set("integrator.step_safety", fmt(in.step_safety));
  out.set("integrator.min_steps", std::to_string(in.min_steps));
  out.set("integrator.dt_scale", fmt(in.dt_scale));
  out.set("integrator.eigen_diagnostics", in.eigen_diagnostics ? "true" : "false");

  // physical units
  std::optional<double> khz;
  if (auto f = r.real("units.trap_frequency_khz")) {
    khz = positive("units.trap_frequency_khz", *f);
    out.set("units.trap_frequency_khz", fmt(*khz));
  }

  // scan axes
  for (const auto& [k, v] : kv.entries()) {
    if (k.rfind("scan.", 0) != 0) continue;
    const std::string key = k.substr(5);
    const auto& def = *find_key(key);
    ScanAxis axis{key, def.type == Type::real_list || def.type == Type::knots ? split(v, ';') : split(v, ',')};
    cfg.scan.push_back(std::move(axis));
    out.set(k, v);
  }

  try {
    cfg.spec.validate();
  } catch (const SpecError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }

  // derived quantities
  const auto& lat = m.lattice;
  const double a0 = lat.oscillator_length();
  out.set("derived.box_length", fmt(m.reservoir.box_length));
  out.set("derived.density_1d", fmt(density));
  out.set("derived.fermi_wavevector", fmt(m.reservoir.fermi_wavevector()));
  out.set("derived.fermi_energy", fmt(m.reservoir.fermi_energy()));
  out.set("derived.trap_frequency", fmt(lat.trap_frequency));
  out.set("derived.oscillator_length", fmt(a0));
  out.set("derived.site_spacing", fmt(lat.site_spacing));
  out.set("derived.recoil_frequency", fmt(lat.recoil_frequency()));
  out.set("derived.omega_over_omega_R", fmt(lat.trap_frequency / lat.recoil_frequency()));
  out.set("derived.density_spacing", fmt(density * lat.site_spacing));
  out.set("derived.density_a0", fmt(density * a0));
  const auto first = m.drive(0.0);
  out.set("derived.detuning_start", fmt(-1.5 * lat.trap_frequency + first.epsilon));
  const double total = cfg.spec.full_schedule().duration();
  out.set("derived.loading_duration", fmt(m.drive.duration()));
  out.set("derived.total_duration", fmt(total));
  out.set("derived.rabi_peak", fmt(cfg.spec.full_schedule().omega().max_value()));
  out.set("derived.mode_count", std::to_string(2 * sites + modes));
  if (khz) {
    // omega / 2 pi = khz fixes eps_F / 2 pi in kHz; the time unit is 1 / eps_F.
    const double ef_khz = *khz / lat.trap_frequency;
    out.set("derived.fermi_energy_khz", fmt(ef_khz));
    out.set("derived.time_unit_us", fmt(1e3 / (2.0 * kPi * ef_khz)));
    out.set("derived.total_duration_ms", fmt(total / (2.0 * kPi * ef_khz)));
    out.set("derived.rabi_peak_khz", fmt(cfg.spec.full_schedule().omega().max_value() * ef_khz));
    if (combined) out.set("derived.gamma_khz", fmt(cfg.spec.dissipation.gamma * ef_khz));
  }

  cfg.resolved = std::move(out);
  return cfg;
}

std::vector<std::string> scan_cell_values(const RunConfig& config, std::size_t index) {
  std::vector<std::string> values(config.scan.size());
  for (std::size_t a = config.scan.size(); a-- > 0;) {
    const auto n = config.scan[a].values.size();
    values[a] = config.scan[a].values[index % n];
    index /= n;
  }
  return values;
}

std::vector<RunConfig> expand_scan(const RunConfig& config) {
  KeyValues base;
  for (const auto& [k, v] : config.resolved.entries())
    if (k.rfind("derived.", 0) != 0 && k.rfind("scan.", 0) != 0) base.set(k, v);
  std::vector<RunConfig> cells;
  const std::size_t n = config.scan_cells();
  cells.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    KeyValues kv = base;
    const auto values = scan_cell_values(config, i);
    for (std::size_t a = 0; a < config.scan.size(); ++a) {
      const auto& key = config.scan[a].key;
      // A scanned choice key may replace alternatives echoed in the base.
      if (key == "lattice.omega") kv.erase("lattice.density_a0");
      if (key == "lattice.density_a0") kv.erase("lattice.omega");
      if (key == "lattice.spacing" || key == "lattice.density_spacing" || key == "lattice.recoil_ratio") {
        for (const char* alt : {"lattice.spacing", "lattice.density_spacing", "lattice.recoil_ratio"})
          kv.erase(alt);
      }
      if (key == "drive.duration") kv.erase("drive.pulse_area");
      if (key == "drive.pulse_area") kv.erase("drive.duration");
      if (key == "lattice.sites" && !config.resolved.get("lattice.offsets")->empty()) {
        const auto offs = parse_real_list("lattice.offsets", *config.resolved.get("lattice.offsets"));
        if (std::all_of(offs.begin(), offs.end(), [](double x) { return x == 0.0; })) kv.erase("lattice.offsets");
      }
      kv.set(key, values[a]);
    }
    try {
      cells.push_back(resolve_config(kv));
    } catch (const ConfigError& e) {
      std::string where;
      for (std::size_t a = 0; a < config.scan.size(); ++a)
        where += (a ? ", " : "") + config.scan[a].key + " = " + values[a];
      throw ConfigError("scan cell " + std::to_string(i) + " (" + where + "): " + e.what());
    }
  }
  return cells;
}

RunConfig with_dt_scale(const RunConfig& config, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ConfigError("--dt-scale must be > 0");
  KeyValues kv;
  for (const auto& [k, v] : config.resolved.entries())
    if (k.rfind("derived.", 0) != 0) kv.set(k, v);
  kv.set("integrator.dt_scale", fmt(config.spec.model.integrator.dt_scale * factor));
  return resolve_config(kv);
}

std::string describe_schema() {
  std::ostringstream out;
  std::string_view section;
  for (const auto& d : kSchema) {
    if (d.section != section) {
      section = d.section;
      out << "[" << section << "]\n";
    }
    out << "  " << d.key;
    if (d.type == Type::choice) out << " (" << d.choices << ")";
    out << ": " << d.help << "\n";
  }
  out << "[scan]\n  <section>.<key> = v1, v2, ...  (lists and knots: separate values with ';')\n";
  return out.str();
}

}  // namespace fermiload::cli
