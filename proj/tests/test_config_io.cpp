#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "rfb/cli.hpp"
#include "rfb/config.hpp"
#include "rfb/io.hpp"

using namespace rfb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rfb_dyn_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rfb_dyn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text(p)); }

}  // namespace

TEST_CASE("empty config gives defaults and flags calibrated values") {
  const auto cfg = parse_config("");
  CHECK(cfg.operating.c_c0 == 0.125);
  CHECK(cfg.system.battery.alpha_c == 0.1);
  CHECK(cfg.provenance.size() == config_keys().size());
  CHECK(cfg.provenance.at("battery.alpha_t") == Provenance::PaperDefault);
  CHECK(cfg.provenance.at("circuit.L") == Provenance::CalibratedDefault);
  CHECK(cfg.provenance.at("integrator.t_end") == Provenance::ToolDefault);
  CHECK(cfg.warnings.size() == 3);
}

TEST_CASE("config syntax") {
  const auto cfg = parse_config(R"(# header comment
battery.T = 300   # trailing comment

[operating]
W = 0.2
c_c0 = 0.3
initial_current = "steady_preload"
r_pre = 2.5
[classifier]
n_osc = 2
)");
  CHECK(cfg.system.battery.T == 300.0);
  CHECK(cfg.operating.W.litres_per_minute() == 0.2);
  CHECK(cfg.operating.c_c0 == 0.3);
  REQUIRE(std::holds_alternative<SteadyPreload>(cfg.operating.initial_current));
  CHECK(std::get<SteadyPreload>(cfg.operating.initial_current).r_pre == 2.5);
  CHECK(cfg.classifier.n_osc == 2);
  CHECK(cfg.provenance.at("operating.W") == Provenance::UserSet);
  CHECK(cfg.provenance.at("battery.T") == Provenance::UserSet);
}

TEST_CASE("config errors carry line numbers") {
  auto line_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("battery.T = 300\nbattery.colour = red\n") == 2);
  CHECK(line_of("\n\nbattery.T = hot\n") == 3);
  CHECK(line_of("battery.T\n") == 1);
  CHECK(line_of("[battery\n") == 1);
  CHECK(line_of("battery.T = 1\nbattery.T = 2\n") == 2);
  CHECK(line_of("classifier.n_osc = 1.5\n") == 1);
  CHECK(line_of("operating.initial_current = closed\n") == 1);
}

TEST_CASE("validation lists every violated invariant") {
  try {
    parse_config("operating.c_c0 = 2.0\nbattery.T = -1\nintegrator.h = 0\n");
    FAIL("expected a validation error");
  } catch (const ConfigValidationError& e) {
    CHECK(e.violations().size() == 3);
    CHECK(std::string(e.what()).find("0 < c_c0 < c_max") != std::string::npos);
  }
}

TEST_CASE("config file reproducing the oscillatory reference run") {
  const auto dir = scratch("case3");
  write_text(dir / "case3.cfg", "operating.W = 0.100\noperating.c_c0 = 0.125\n");
  const auto cfg = load_config(dir / "case3.cfg");
  const auto lab = classify(integrate(cfg.system, cfg.operating, cfg.integrator), cfg.classifier);
  CHECK(lab.label == Case::Case3);
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), ConfigParseError);
}

TEST_CASE("numbers round trip through their text form") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int k = 0; k < 2000; ++k) {
    const double v = std::ldexp(mant(rng), ex(rng));
    CHECK(parse_number(format_number(v)) == v);
  }
  CHECK(std::isnan(parse_number(format_number(NAN))));
  CHECK(parse_number("+1.5") == 1.5);
  CHECK_THROWS_AS(parse_number("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number(""), std::invalid_argument);
}

TEST_CASE("trajectory CSV re-parses to the in-memory values") {
  OperatingCondition op;
  IntegratorConfig cfg;
  cfg.t_end = 30.0;
  const auto traj = integrate(RfbSystem{}, op, cfg);
  const auto t = parse_csv(to_csv(trajectory_table(traj)));
  CHECK(t.header == std::vector<std::string>{"t_s", "c_c", "c_t", "i_A", "emf_V"});
  REQUIRE(t.rows.size() == traj.samples.size());
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    CHECK(parse_number(t.rows[k][0]) == traj.samples[k].t);
    CHECK(parse_number(t.rows[k][1]) == traj.samples[k].c_c);
    CHECK(parse_number(t.rows[k][2]) == traj.samples[k].c_t);
    CHECK(parse_number(t.rows[k][3]) == traj.samples[k].i);
    CHECK(parse_number(t.rows[k][4]) == traj.emf[k]);
  }
}

TEST_CASE("map and boundary CSV") {
  SweepResult r;
  r.W = {0.1, 0.2};
  r.c_c0 = {0.3};
  SweepCell a;
  a.W = 0.1;
  a.c_c0 = 0.3;
  a.epsilon_t = 0.123456789012345678;
  a.label = Case::Case1;
  a.end = EndKind::Depleted;
  SweepCell b = a;
  b.W = 0.2;
  b.label.reset();
  b.epsilon_t = NAN;
  r.cells = {a, b};
  const auto t = parse_csv(to_csv(map_table(r)));
  CHECK(t.header[0] == "W_L_per_min");
  CHECK(t.header[1] == "c_c0_mol_per_L");
  CHECK(parse_number(t.rows[0][t.column("epsilon_t")]) == a.epsilon_t);
  CHECK(t.rows[0][t.column("case_label")] == "Case1");
  CHECK(t.rows[0][t.column("end_event")] == "Depleted");
  CHECK(t.rows[1][t.column("case_label")] == "Unclassified");

  const auto bt = parse_csv(to_csv(boundary_table({{0.5, 0.03}})));
  CHECK(bt.header == std::vector<std::string>{"c_c0_mol_per_L", "W_star_L_per_min"});
  CHECK(parse_number(bt.rows[0][1]) == 0.03);
}

TEST_CASE("cli: simulate writes the trajectory and a labelled summary") {
  const auto dir = scratch("sim");
  const auto r = cli({"simulate", "--out", dir.string(), "--operating.W", "0.100", "--operating.c_c0", "0.125"});
  REQUIRE(r.status == 0);
  const auto s = read_json(dir / "summary.json");
  CHECK(s["case_label"] == "Case3");
  CHECK(s["end_event"]["kind"] == "CurrentZero");
  CHECK(s["config"]["parameters"]["operating.W"]["provenance"] == "user_set");
  CHECK(s["config"]["parameters"]["circuit.L"]["provenance"] == "calibrated_default");
  CHECK(s["config"]["parameters"]["battery.T"]["provenance"] == "paper_default");
  const auto t = parse_csv(read_text(dir / "trajectory.csv"));
  CHECK(t.rows.size() == s["samples"].get<std::size_t>());
  CHECK(r.err.find("warning: circuit.L") != std::string::npos);
}

TEST_CASE("cli: eigen reproduces the 1:2:4 slow eigenvalues") {
  const auto dir = scratch("eigen");
  REQUIRE(cli({"eigen", "--W", "0.050,0.100,0.200", "--out", dir.string()}).status == 0);
  const auto j = read_json(dir / "eigen.json");
  REQUIRE(j["spectra"].size() == 3);
  double slow[3];
  for (int k = 0; k < 3; ++k) {
    for (const auto& z : j["spectra"][k]["eigenvalues"]) {
      if (z["im"].get<double>() == 0.0) slow[k] = z["re"].get<double>();
    }
    CHECK(j["spectra"][k]["phase_lags_deg"].size() == 3);
  }
  CHECK(slow[1] / slow[0] == doctest::Approx(2.0).epsilon(0.02));
  CHECK(slow[2] / slow[0] == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("cli: bifurcate, field and calibrate") {
  const auto dir = scratch("misc");
  REQUIRE(cli({"bifurcate", "--out", dir.string()}).status == 0);
  const auto b = read_json(dir / "bifurcation.json");
  CHECK(b["x1_c"].get<double>() == doctest::Approx(5.72e-4).epsilon(0.25));
  CHECK(b["spectrum_above"]["all_real"] == true);
  CHECK(b["spectrum_below"]["all_real"] == false);
  CHECK(parse_csv(read_text(dir / "branches.csv")).rows.size() == 400);

  REQUIRE(cli({"field", "--out", dir.string(), "--count", "11"}).status == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.path().filename().string().starts_with("field_x");
  CHECK(files == 9);
  const auto f = parse_csv(read_text(dir / "field_x2_0.csv"));
  CHECK(f.header.front() == "kind");

  REQUIRE(cli({"calibrate", "--out", dir.string()}).status == 0);
  const auto c = read_json(dir / "calibration.json");
  CHECK(c["result"]["E_e0_V"].get<double>() == doctest::Approx(1.40).epsilon(0.01));
}

TEST_CASE("cli: failures produce JSON on stderr and a nonzero status") {
  const auto dir = scratch("fail");
  auto r = cli({"simulate", "--out", dir.string(), "--operating.c_c0", "2.0"});
  CHECK(r.status == 1);
  auto j = nlohmann::json::parse(r.err.substr(r.err.find('{')));
  CHECK(j["error"] == "ConfigValidationError");
  CHECK(j["violations"].size() == 1);

  r = cli({"bifurcate", "--out", dir.string(), "--x1-lo", "0.01", "--x1-hi", "0.4"});
  CHECK(r.status == 1);
  j = nlohmann::json::parse(r.err.substr(r.err.find('{')));
  CHECK(j["error"] == "NoBifurcation");

  r = cli({"simulate", "--no-such-flag"});
  CHECK(r.status == 2);
  CHECK(nlohmann::json::parse(r.err)["error"] == "UsageError");

  CHECK(cli({}).status == 2);
}

TEST_CASE("cli: a small sweep writes map and boundary") {
  const auto dir = scratch("sweep");
  const auto r = cli({"sweep", "--out", dir.string(), "--W-min", "0.02", "--W-count", "6", "--c-min", "0.1", "--c-max",
                      "0.4", "--c-count", "3", "--workers", "2"});
  REQUIRE(r.status == 0);
  const auto m = parse_csv(read_text(dir / "map.csv"));
  CHECK(m.rows.size() == 18);
  CHECK(m.header == std::vector<std::string>{"W_L_per_min", "c_c0_mol_per_L", "epsilon_t", "case_label", "t_f_s",
                                             "end_event", "oscillation_count", "complete"});
  const auto b = parse_csv(read_text(dir / "boundary.csv"));
  CHECK(b.header == std::vector<std::string>{"c_c0_mol_per_L", "W_star_L_per_min"});
  CHECK(read_json(dir / "sweep.json").contains("config"));
}
