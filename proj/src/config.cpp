#include "rfb/config.hpp"

#include <fstream>
#include <sstream>

#include "rfb/io.hpp"

namespace rfb {

ConfigParseError::ConfigParseError(const std::string& source, int line, const std::string& msg)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg),
      line_(line) {}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration: " + join(violations)), violations_(std::move(violations)) {}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::PaperDefault: return "paper_default";
    case Provenance::CalibratedDefault: return "calibrated_default";
    case Provenance::ToolDefault: return "tool_default";
    case Provenance::UserSet: return "user_set";
  }
  return "unknown";
}

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> out = system.battery.violations();
  for (auto& v : system.circuit.violations()) out.push_back(std::move(v));
  for (auto& v : operating.violations(system.battery)) out.push_back(std::move(v));
  for (auto& v : integrator.violations()) out.push_back(std::move(v));
  for (auto& v : classifier.violations()) out.push_back(std::move(v));
  if (output_dir.empty()) out.push_back("output.dir must not be empty");
  return out;
}

namespace {

using P = Provenance;

int parse_int(const std::string& s) {
  const double v = parse_number(s);
  if (v != static_cast<double>(static_cast<int>(v))) throw std::invalid_argument("expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

template <class Get, class Set>
ConfigKey number_key(std::string name, std::string unit, P prov, std::string desc, Get get, Set set) {
  return {std::move(name), std::move(unit), prov, std::move(desc),
          [set](RunConfig& c, const std::string& v) { set(c, parse_number(v)); },
          [get](const RunConfig& c) { return format_number(get(c)); }};
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(number_key("battery.alpha_c", "L", P::PaperDefault, "cell volume",
                           [](const RunConfig& c) { return c.system.battery.alpha_c; },
                           [](RunConfig& c, double v) { c.system.battery.alpha_c = v; }));
    k.push_back(number_key("battery.alpha_t", "L", P::PaperDefault, "tank volume",
                           [](const RunConfig& c) { return c.system.battery.alpha_t; },
                           [](RunConfig& c, double v) { c.system.battery.alpha_t = v; }));
    k.push_back(number_key("battery.T", "K", P::PaperDefault, "temperature",
                           [](const RunConfig& c) { return c.system.battery.T; },
                           [](RunConfig& c, double v) { c.system.battery.T = v; }));
    k.push_back(number_key("battery.c_max", "mol/L", P::PaperDefault, "maximum concentration",
                           [](const RunConfig& c) { return c.system.battery.c_max; },
                           [](RunConfig& c, double v) { c.system.battery.c_max = v; }));
    k.push_back(number_key("battery.E_e0", "V", P::CalibratedDefault, "EMF at half charge",
                           [](const RunConfig& c) { return c.system.battery.E_e0; },
                           [](RunConfig& c, double v) { c.system.battery.E_e0 = v; }));
    k.push_back(number_key("battery.F", "C/mol", P::ToolDefault, "Faraday constant",
                           [](const RunConfig& c) { return c.system.battery.F; },
                           [](RunConfig& c, double v) { c.system.battery.F = v; }));
    k.push_back(number_key("battery.R", "J/(mol K)", P::ToolDefault, "gas constant",
                           [](const RunConfig& c) { return c.system.battery.R; },
                           [](RunConfig& c, double v) { c.system.battery.R = v; }));
    k.push_back(number_key("battery.emf_slope", "V", P::ToolDefault, "Nernst prefactor, replaces 2RT/F",
                           [](const RunConfig& c) { return c.system.battery.emf_slope(); },
                           [](RunConfig& c, double v) { c.system.battery.emf_slope_override = v; }));
    k.push_back(number_key("circuit.r1", "Ohm", P::ToolDefault, "source-side resistance",
                           [](const RunConfig& c) { return c.system.circuit.r1; },
                           [](RunConfig& c, double v) { c.system.circuit.r1 = v; }));
    k.push_back(number_key("circuit.r2", "Ohm", P::CalibratedDefault, "load resistance",
                           [](const RunConfig& c) { return c.system.circuit.r2; },
                           [](RunConfig& c, double v) { c.system.circuit.r2 = v; }));
    k.push_back(number_key("circuit.L", "H", P::CalibratedDefault, "inductance",
                           [](const RunConfig& c) { return c.system.circuit.L_ind; },
                           [](RunConfig& c, double v) { c.system.circuit.L_ind = v; }));
    k.push_back(number_key("operating.W", "L/min", P::PaperDefault, "flow rate",
                           [](const RunConfig& c) { return c.operating.W.litres_per_minute(); },
                           [](RunConfig& c, double v) { c.operating.W = FlowRate::per_minute(v); }));
    k.push_back(number_key("operating.c_c0", "mol/L", P::PaperDefault, "initial concentration",
                           [](const RunConfig& c) { return c.operating.c_c0; },
                           [](RunConfig& c, double v) { c.operating.c_c0 = v; }));
    k.push_back({"operating.initial_current", "", P::ToolDefault, "open_switch | steady_preload",
                 [](RunConfig& c, const std::string& v) {
                   double r_pre = 1.0;
                   if (const auto* pre = std::get_if<SteadyPreload>(&c.operating.initial_current)) r_pre = pre->r_pre;
                   if (v == "open_switch") {
                     c.operating.initial_current = OpenSwitch{};
                   } else if (v == "steady_preload") {
                     c.operating.initial_current = SteadyPreload{r_pre};
                   } else {
                     throw std::invalid_argument("expected open_switch or steady_preload, got '" + v + "'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(std::holds_alternative<OpenSwitch>(c.operating.initial_current)
                                          ? "open_switch"
                                          : "steady_preload");
                 }});
    k.push_back({"operating.r_pre", "Ohm", P::ToolDefault, "pre-step load; setting it selects steady_preload",
                 [](RunConfig& c, const std::string& v) {
                   const double r = parse_number(v);
                   if (auto* pre = std::get_if<SteadyPreload>(&c.operating.initial_current)) {
                     pre->r_pre = r;
                   } else {
                     c.operating.initial_current = SteadyPreload{r};
                   }
                 },
                 [](const RunConfig& c) {
                   const auto* pre = std::get_if<SteadyPreload>(&c.operating.initial_current);
                   return format_number(pre ? pre->r_pre : SteadyPreload{}.r_pre);
                 }});
    k.push_back(number_key("integrator.h", "s", P::PaperDefault, "RK4 step",
                           [](const RunConfig& c) { return c.integrator.h; },
                           [](RunConfig& c, double v) { c.integrator.h = v; }));
    k.push_back(number_key("integrator.t_end", "s", P::ToolDefault, "horizon",
                           [](const RunConfig& c) { return c.integrator.t_end; },
                           [](RunConfig& c, double v) { c.integrator.t_end = v; }));
    k.push_back({"integrator.record_stride", "", P::ToolDefault, "steps per stored sample",
                 [](RunConfig& c, const std::string& v) { c.integrator.record_stride = parse_int(v); },
                 [](const RunConfig& c) { return std::to_string(c.integrator.record_stride); }});
    k.push_back(number_key("integrator.current_tol", "", P::ToolDefault, "current-zero threshold / i_hat",
                           [](const RunConfig& c) { return c.integrator.current_tol; },
                           [](RunConfig& c, double v) { c.integrator.current_tol = v; }));
    k.push_back(number_key("integrator.floor_fraction", "", P::ToolDefault, "depletion floor / c_max",
                           [](const RunConfig& c) { return c.integrator.floor_fraction; },
                           [](RunConfig& c, double v) { c.integrator.floor_fraction = v; }));
    k.push_back({"classifier.n_osc", "", P::ToolDefault, "current maxima needed for Case3",
                 [](RunConfig& c, const std::string& v) { c.classifier.n_osc = parse_int(v); },
                 [](const RunConfig& c) { return std::to_string(c.classifier.n_osc); }});
    k.push_back(number_key("classifier.p_osc", "", P::ToolDefault, "minimum peak prominence / i_hat",
                           [](const RunConfig& c) { return c.classifier.p_osc; },
                           [](RunConfig& c, double v) { c.classifier.p_osc = v; }));
    k.push_back(number_key("classifier.eta", "", P::ToolDefault, "Case2 consumption threshold",
                           [](const RunConfig& c) { return c.classifier.eta; },
                           [](RunConfig& c, double v) { c.classifier.eta = v; }));
    k.push_back({"output.dir", "", P::ToolDefault, "output directory",
                 [](RunConfig& c, const std::string& v) { c.output_dir = v; },
                 [](const RunConfig& c) { return c.output_dir.string(); }});
    return k;
  }();
  return keys;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void refresh_warnings(RunConfig& cfg) {
  cfg.warnings.clear();
  for (const auto& [name, prov] : cfg.provenance) {
    if (prov == P::CalibratedDefault) {
      cfg.warnings.push_back(name + " not set; using calibrated default " + find_key(name)->get(cfg));
    }
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& source, int line) {
  const ConfigKey* k = find_key(key);
  if (!k) throw ConfigParseError(source, line, "unknown key '" + key + "'");
  try {
    k->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigParseError(source, line, key + ": " + e.what());
  }
  cfg.provenance[key] = P::UserSet;
  if (key == "operating.r_pre") cfg.provenance["operating.initial_current"] = P::UserSet;
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  for (const auto& k : config_keys()) cfg.provenance[k.name] = k.default_provenance;
  refresh_warnings(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  auto v = cfg.violations();
  if (!v.empty()) throw ConfigValidationError(std::move(v));
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  RunConfig cfg = default_config();
  std::map<std::string, int> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigParseError(source, line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigParseError(source, line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigParseError(source, line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = unquote(trim(std::string_view(line).substr(eq + 1)));
    if (key.empty()) throw ConfigParseError(source, line_no, "missing key");
    if (value.empty()) throw ConfigParseError(source, line_no, "missing value for '" + key + "'");
    if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
    if (auto it = seen.find(key); it != seen.end()) {
      throw ConfigParseError(source, line_no, "duplicate key '" + key + "' (first set on line " +
                                                  std::to_string(it->second) + ")");
    }
    seen[key] = line_no;
    set_key(cfg, key, value, source, line_no);
  }
  refresh_warnings(cfg);
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  set_key(cfg, key, value, "override", 0);
  refresh_warnings(cfg);
}

}  // namespace rfb
