#include "rfb/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfb/analysis.hpp"
#include "rfb/config.hpp"
#include "rfb/integrator.hpp"
#include "rfb/io.hpp"
#include "rfb/sweep.hpp"

namespace rfb {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config_path;
  std::string out_dir;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out_dir, "output directory (overrides output.dir)");
  for (const auto& k : config_keys()) {
    std::string desc = k.description;
    if (!k.unit.empty()) desc += " [" + k.unit + "]";
    sub->add_option("--" + k.name, c.overrides[k.name], desc)->group("Config overrides");
  }
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
  for (const auto& k : config_keys()) {
    const auto it = c.overrides.find(k.name);
    if (it != c.overrides.end() && !it->second.empty()) apply_override(cfg, k.name, it->second);
  }
  if (!c.out_dir.empty()) apply_override(cfg, "output.dir", c.out_dir);
  validate(cfg);
  return cfg;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_csv(const fs::path& path, const CsvTable& t) { write_text(path, to_csv(t)); }

json end_json(const EndEvent& e) { return {{"kind", to_string(e.kind)}, {"t_s", e.t}}; }

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigParseError*>(&e)) return "ConfigParseError";
  if (dynamic_cast<const ConfigValidationError*>(&e)) return "ConfigValidationError";
  if (dynamic_cast<const InvalidParameter*>(&e)) return "InvalidParameter";
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const NoBifurcation*>(&e)) return "NoBifurcation";
  if (dynamic_cast<const CalibrationMismatch*>(&e)) return "CalibrationMismatch";
  if (dynamic_cast<const Unclassifiable*>(&e)) return "Unclassifiable";
  if (dynamic_cast<const EmptyBoundary*>(&e)) return "EmptyBoundary";
  if (dynamic_cast<const NumericalBlowup*>(&e)) return "NumericalBlowup";
  if (dynamic_cast<const NoDischarge*>(&e)) return "NoDischarge";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "FilesystemError";
  return "Error";
}

json error_json(const std::exception& e) {
  json j{{"error", error_type(e)}, {"message", e.what()}};
  if (const auto* p = dynamic_cast<const ConfigParseError*>(&e)) j["line"] = p->line();
  if (const auto* v = dynamic_cast<const ConfigValidationError*>(&e)) j["violations"] = v->violations();
  return j;
}

// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const Trajectory traj = integrate(cfg.system, cfg.operating, cfg.integrator);
  const fs::path dir = cfg.output_dir;
  write_csv(dir / "trajectory.csv", trajectory_table(traj));

  json summary{{"command", "simulate"}, {"end_event", end_json(traj.end)}, {"i_hat_A", traj.i_hat},
               {"samples", traj.samples.size()}, {"config", config_json(cfg)}};
  try {
    const CaseLabel lab = classify(traj, cfg.classifier);
    summary["case_label"] = to_string(lab.label);
    summary["epsilon_t"] = lab.epsilon_t;
    summary["oscillation_count"] = lab.oscillation_count;
    summary["t_f_s"] = lab.t_f;
    summary["complete"] = lab.complete;
  } catch (const Unclassifiable& e) {
    summary["case_label"] = nullptr;
    summary["classification_error"] = e.what();
  }
  write_json(dir / "summary.json", summary);
  out << (dir / "trajectory.csv").string() << "\n" << (dir / "summary.json").string() << "\n";
}

struct SweepOptions {
  int workers = 0;
  double W_min = 0.001, W_max = 0.200, c_min = 0.01, c_max = 1.00;
  int W_count = 40, c_count = 20;
  bool linear_W = false;
  bool full_resolution = false;
  double t_end_cap = SweepSpec{}.t_end_cap;
};

void cmd_sweep(const RunConfig& cfg, const SweepOptions& o, std::ostream& out) {
  SweepSpec spec = o.full_resolution ? SweepSpec::full_resolution() : SweepSpec{};
  if (!o.full_resolution) {
    spec.W.count = o.W_count;
    spec.c_c0.count = o.c_count;
  }
  spec.W.lo = o.W_min;
  spec.W.hi = o.W_max;
  spec.W.log_spaced = !o.linear_W;
  spec.c_c0.lo = o.c_min;
  spec.c_c0.hi = o.c_max;
  spec.system = cfg.system;
  spec.initial_current = cfg.operating.initial_current;
  spec.integrator = cfg.integrator;
  spec.thresholds = cfg.classifier;
  spec.t_end_cap = o.t_end_cap;
  spec.workers = resolve_workers(o.workers);

  const SweepResult res = run_sweep(spec);
  const fs::path dir = cfg.output_dir;
  write_csv(dir / "map.csv", map_table(res));

  json summary{{"command", "sweep"},
               {"grid", {{"W_L_per_min", {o.W_min, o.W_max, res.W.size()}},
                         {"c_c0_mol_per_L", {o.c_min, o.c_max, res.c_c0.size()}},
                         {"W_spacing", spec.W.log_spaced ? "log" : "linear"}}},
               {"workers", spec.workers},
               {"eta", res.eta},
               {"config", config_json(cfg)}};
  std::map<std::string, int> counts;
  for (const auto& c : res.cells) ++counts[c.label ? std::string(to_string(*c.label)) : "Unclassified"];
  summary["label_counts"] = counts;
  try {
    const auto boundary = extract_boundary(res, res.eta);
    write_csv(dir / "boundary.csv", boundary_table(boundary));
    summary["boundary_points"] = boundary.size();
  } catch (const EmptyBoundary& e) {
    write_csv(dir / "boundary.csv", boundary_table({}));
    summary["boundary_points"] = 0;
    summary["boundary_error"] = e.what();
  }
  write_json(dir / "sweep.json", summary);
  out << (dir / "map.csv").string() << "\n" << (dir / "boundary.csv").string() << "\n";
}

void cmd_eigen(const RunConfig& cfg, const std::vector<double>& Ws, std::optional<double> x1, std::ostream& out) {
  json rows = json::array();
  for (double w : Ws) {
    const FlowRate W = FlowRate::per_minute(w);
    const DimensionlessParams d = nondimensionalize(cfg.system, W);
    const double at = x1 ? *x1 : fixed_point(d).x1;
    json row{{"W_L_per_min", w}, {"x1", at}, {"at_fixed_point", !x1.has_value()}, {"dimensionless", to_json(d)}};
    row.update(to_json(eigenvalues(jacobian(at, d))));
    rows.push_back(std::move(row));
  }
  const fs::path path = fs::path(cfg.output_dir) / "eigen.json";
  write_json(path, {{"command", "eigen"}, {"spectra", rows}, {"config", config_json(cfg)}});
  out << path.string() << "\n";
}

void cmd_bifurcate(const RunConfig& cfg, double lo, double hi, int n, std::ostream& out) {
  const DimensionlessParams d = nondimensionalize(cfg.system, cfg.operating.W);
  const BifurcationResult bif = bifurcation_scan(d, lo, hi, n);
  const fs::path dir = cfg.output_dir;
  write_csv(dir / "branches.csv", branch_table(bif));
  const double above = bif.x1_c * (1.0 + 1e-3), below = bif.x1_c * (1.0 - 1e-3);
  write_json(dir / "bifurcation.json",
             {{"command", "bifurcate"},
              {"W_L_per_min", cfg.operating.W.litres_per_minute()},
              {"x1_c", bif.x1_c},
              {"c_c_at_x1_c_mol_per_L", bif.x1_c * d.c_hat},
              {"discriminant_at_x1_c", bif.discriminant_at_x1_c},
              {"range", {lo, hi}},
              {"samples", n},
              {"spectrum_above", to_json(eigenvalues(jacobian(above, d)))},
              {"spectrum_below", to_json(eigenvalues(jacobian(below, d)))},
              {"dimensionless", to_json(d)},
              {"config", config_json(cfg)}});
  out << (dir / "bifurcation.json").string() << "\n" << (dir / "branches.csv").string() << "\n";
}

struct FieldOptions {
  std::vector<std::string> planes;
  int count = 41;
  std::vector<double> x1_range{1e-5, 4e-4};
  std::vector<double> x2_range{-4e-3, 4e-3};
  std::vector<double> x3_range{0.55, 0.75};
};

Plane parse_plane(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw InvalidParameter("plane must look like x2=0, got '" + s + "'");
  const std::string axis = s.substr(0, eq);
  Plane p;
  if (axis == "x1") {
    p.axis = Axis::X1;
  } else if (axis == "x2") {
    p.axis = Axis::X2;
  } else if (axis == "x3") {
    p.axis = Axis::X3;
  } else {
    throw InvalidParameter("plane axis must be x1, x2 or x3, got '" + axis + "'");
  }
  p.level = parse_number(s.substr(eq + 1));
  return p;
}

void cmd_field(const RunConfig& cfg, const FieldOptions& o, std::ostream& out) {
  std::vector<std::string> planes = o.planes;
  if (planes.empty()) {
    planes = {"x2=-0.002", "x2=0", "x2=0.002", "x3=0.60", "x3=0.66", "x3=0.70", "x1=0.5e-4", "x1=1.0e-4", "x1=2.0e-4"};
  }
  const DimensionlessParams d = nondimensionalize(cfg.system, cfg.operating.W);
  const std::array<AxisRange, 3> ranges{{{o.x1_range.at(0), o.x1_range.at(1), o.count},
                                         {o.x2_range.at(0), o.x2_range.at(1), o.count},
                                         {o.x3_range.at(0), o.x3_range.at(1), o.count}}};
  const fs::path dir = cfg.output_dir;
  json files = json::array();
  for (const auto& spec : planes) {
    const Plane p = parse_plane(spec);
    const int fixed = static_cast<int>(p.axis);
    const auto& first = ranges[fixed == 0 ? 1 : 0];
    const auto& second = ranges[fixed == 2 ? 1 : 2];
    const FieldSlice slice = vector_field_slice(d, p, first, second);
    const std::string name = "field_x" + std::to_string(fixed + 1) + "_" + format_number(p.level) + ".csv";
    write_csv(dir / name, field_table(slice));
    files.push_back({{"plane", spec}, {"file", name}});
    out << (dir / name).string() << "\n";
  }
  write_json(dir / "field.json", {{"command", "field"},
                                  {"W_L_per_min", cfg.operating.W.litres_per_minute()},
                                  {"dimensionless", to_json(d)},
                                  {"files", files},
                                  {"config", config_json(cfg)}});
}

void cmd_calibrate(const RunConfig& cfg, const CalibrationTargets& targets, std::ostream& out) {
  const CalibrationResult r = calibrate(cfg.system.battery, targets);
  const fs::path path = fs::path(cfg.output_dir) / "calibration.json";
  write_json(path, {{"command", "calibrate"},
                    {"targets", {{"fixed_point_x1", targets.fixed_point_x1},
                                 {"W_L_per_min", targets.W.litres_per_minute()},
                                 {"slow_eigenvalue", targets.slow_eigenvalue},
                                 {"fast_real_part", targets.fast_real_part}}},
                    {"result", to_json(r)},
                    {"config", config_json(cfg)}});
  out << path.string() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Redox flow battery transient dynamics"};
  app.require_subcommand(1);
  Common common;

  auto* simulate = app.add_subcommand("simulate", "integrate one operating condition");
  auto* sweep = app.add_subcommand("sweep", "consumption-rate map over (W, c_c0)");
  auto* eigen = app.add_subcommand("eigen", "fixed-point spectra for a list of flow rates");
  auto* bifurcate = app.add_subcommand("bifurcate", "real/complex transition along x1");
  auto* field = app.add_subcommand("field", "vector-field slices and nullclines");
  auto* calib = app.add_subcommand("calibrate", "recover E_e0, L and r1 + r2 from spectral targets");
  for (auto* s : {simulate, sweep, eigen, bifurcate, field, calib}) add_common(s, common);

  SweepOptions so;
  sweep->add_option("--workers", so.workers, "worker threads (default: RFB_DYN_WORKERS or all cores)");
  sweep->add_option("--W-min", so.W_min, "[L/min]");
  sweep->add_option("--W-max", so.W_max, "[L/min]");
  sweep->add_option("--W-count", so.W_count);
  sweep->add_option("--c-min", so.c_min, "[mol/L]");
  sweep->add_option("--c-max", so.c_max, "[mol/L]");
  sweep->add_option("--c-count", so.c_count);
  sweep->add_flag("--linear-W", so.linear_W, "linear instead of logarithmic W spacing");
  sweep->add_flag("--full-resolution", so.full_resolution, "200 x 100 grid");
  sweep->add_option("--t-end-cap", so.t_end_cap, "per-cell horizon ceiling [s]");

  std::vector<double> eigen_W{0.050, 0.100, 0.200};
  std::optional<double> eigen_x1;
  eigen->add_option("--W", eigen_W, "flow rates [L/min]")->delimiter(',');
  eigen->add_option("--x1", eigen_x1, "evaluate at this x1 instead of the fixed point");

  double bif_lo = 1e-6, bif_hi = 5e-3;
  int bif_n = 400;
  bifurcate->add_option("--x1-lo", bif_lo);
  bifurcate->add_option("--x1-hi", bif_hi);
  bifurcate->add_option("--samples", bif_n);

  FieldOptions fo;
  field->add_option("--plane", fo.planes, "e.g. x2=0; repeatable (default: nine standard planes)");
  field->add_option("--count", fo.count, "lattice points per axis");
  field->add_option("--x1-range", fo.x1_range)->delimiter(',')->expected(2);
  field->add_option("--x2-range", fo.x2_range)->delimiter(',')->expected(2);
  field->add_option("--x3-range", fo.x3_range)->delimiter(',')->expected(2);

  CalibrationTargets targets;
  double target_W = targets.W.litres_per_minute();
  calib->add_option("--x1-star", targets.fixed_point_x1, "fixed point target");
  calib->add_option("--target-W", target_W, "flow rate of the spectral targets [L/min]");
  calib->add_option("--slow", targets.slow_eigenvalue, "slow eigenvalue target");
  calib->add_option("--fast-re", targets.fast_real_part, "fast pair real part target");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    const RunConfig cfg = resolve_config(common);
    for (const auto& w : cfg.warnings) err << "warning: " << w << "\n";
    if (simulate->parsed()) cmd_simulate(cfg, out);
    if (sweep->parsed()) cmd_sweep(cfg, so, out);
    if (eigen->parsed()) cmd_eigen(cfg, eigen_W, eigen_x1, out);
    if (bifurcate->parsed()) cmd_bifurcate(cfg, bif_lo, bif_hi, bif_n, out);
    if (field->parsed()) cmd_field(cfg, fo, out);
    if (calib->parsed()) {
      targets.W = FlowRate::per_minute(target_W);
      cmd_calibrate(cfg, targets, out);
    }
  } catch (const std::exception& e) {
    err << error_json(e).dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace rfb
