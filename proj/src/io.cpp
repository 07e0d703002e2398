#include "rfb/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rfb {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_number(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw std::out_of_range("no CSV column '" + std::string(name) + "'");
}

std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += cells[k];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  bool first = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw std::runtime_error("CSV row width differs from header");
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CsvTable trajectory_table(const Trajectory& traj) {
  CsvTable t{{"t_s", "c_c", "c_t", "i_A", "emf_V"}, {}};
  t.rows.reserve(traj.samples.size());
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const auto& s = traj.samples[k];
    t.rows.push_back({format_number(s.t), format_number(s.c_c), format_number(s.c_t), format_number(s.i),
                      format_number(traj.emf[k])});
  }
  return t;
}

CsvTable map_table(const SweepResult& result) {
  CsvTable t{{"W_L_per_min", "c_c0_mol_per_L", "epsilon_t", "case_label", "t_f_s", "end_event", "oscillation_count",
              "complete"},
             {}};
  for (const auto& c : result.cells) {
    t.rows.push_back({format_number(c.W), format_number(c.c_c0), format_number(c.epsilon_t),
                      c.label ? std::string(to_string(*c.label)) : "Unclassified", format_number(c.t_f),
                      std::string(to_string(c.end)), std::to_string(c.oscillation_count), c.complete ? "1" : "0"});
  }
  return t;
}

CsvTable boundary_table(const std::vector<BoundaryPoint>& boundary) {
  CsvTable t{{"c_c0_mol_per_L", "W_star_L_per_min"}, {}};
  for (const auto& p : boundary) t.rows.push_back({format_number(p.c_c0), format_number(p.W_star)});
  return t;
}

CsvTable branch_table(const BifurcationResult& bif) {
  CsvTable t{{"x1", "discriminant", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "lambda3_re",
              "lambda3_im", "lag1_deg", "lag2_deg", "lag3_deg"},
             {}};
  for (const auto& b : bif.branch) {
    std::vector<std::string> row{format_number(b.x1), format_number(b.discriminant)};
    for (const auto& z : b.spectrum.lambda) {
      row.push_back(format_number(z.real()));
      row.push_back(format_number(z.imag()));
    }
    for (double a : phase_lags(b.spectrum)) row.push_back(format_number(a));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable field_table(const FieldSlice& slice) {
  CsvTable t{{"kind", "x1", "x2", "x3", "dx1_dtau", "dx2_dtau", "dx3_dtau", "valid"}, {}};
  auto add = [&](const char* kind, const std::vector<FieldSample>& v) {
    for (const auto& s : v) {
      t.rows.push_back({kind, format_number(s.x[0]), format_number(s.x[1]), format_number(s.x[2]),
                        format_number(s.dx[0]), format_number(s.dx[1]), format_number(s.dx[2]),
                        s.valid ? "1" : "0"});
    }
  };
  add("grid", slice.grid);
  add("slow_nullcline", slice.slow_nullcline);
  add("fast_nullcline", slice.fast_nullcline);
  return t;
}

nlohmann::json to_json(const std::complex<double>& z) { return {{"re", z.real()}, {"im", z.imag()}}; }

nlohmann::json to_json(const EigenSpectrum& s) {
  nlohmann::json lambdas = nlohmann::json::array();
  for (const auto& z : s.lambda) lambdas.push_back(to_json(z));
  const auto lags = phase_lags(s);
  return {{"eigenvalues", lambdas}, {"phase_lags_deg", lags}, {"all_real", s.all_real()}};
}

nlohmann::json to_json(const DimensionlessParams& d) {
  return {{"beta", d.beta},   {"gamma", d.gamma}, {"delta", d.delta},   {"epsilon", d.epsilon},
          {"c_hat_mol_per_L", d.c_hat}, {"t_hat_s", d.t_hat}, {"i_hat_A", d.i_hat}, {"t_hat_prime_s", d.t_hat_prime}};
}

nlohmann::json to_json(const CalibrationResult& c) {
  return {
      {"E_e0_V", c.E_e0},
      {"L_H", c.L_ind},
      {"r_total_Ohm", c.r_total},
      {"epsilon", c.epsilon},
      {"t_hat_s", c.t_hat},
      {"forward", {{"fixed_point_x1", c.fixed_point_x1}, {"slow_eigenvalue", c.slow_eigenvalue},
                   {"fast_real_part", c.fast_real_part}}},
      {"relative_residuals", {{"fixed_point_x1", c.residual_fixed_point}, {"slow_eigenvalue", c.residual_slow},
                              {"fast_real_part", c.residual_fast}}},
  };
}

nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& k : config_keys()) {
    values[k.name] = {{"value", k.get(cfg)}, {"unit", k.unit}, {"provenance", to_string(cfg.provenance.at(k.name))}};
  }
  return {{"parameters", values}, {"warnings", cfg.warnings}};
}

}  // namespace rfb
