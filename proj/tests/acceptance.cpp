// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rfb/analysis.hpp"
#include "rfb/cli.hpp"
#include "rfb/integrator.hpp"
#include "rfb/io.hpp"
#include "rfb/sweep.hpp"

using namespace rfb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

double slow_root(const EigenSpectrum& s) {
  for (const auto& z : s.lambda) {
    if (z.imag() == 0.0) return z.real();
  }
  return NAN;
}

RfbSystem calibrated_system(const CalibrationResult& c) {
  RfbSystem sys;
  sys.battery.E_e0 = c.E_e0;
  sys.circuit = {0.0, c.r_total, c.L_ind};
  return sys;
}

OperatingCondition reference(double W) {
  OperatingCondition op;
  op.W = FlowRate::per_minute(W);
  op.c_c0 = 0.125;
  return op;
}

// Trajectory-derived values shared by criteria 6 to 8.
struct Shared {
  CalibrationResult cal;
  RfbSystem sys;
  std::vector<double> balance;  // charge balance error per trajectory
};

Outcome fixed_point_criterion(Shared& s) {
  DimensionlessParams d = nondimensionalize(s.sys, FlowRate::per_minute(0.05));
  d.epsilon = s.cal.epsilon;
  double best = 1e9, x1 = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    x1 = fixed_point(d).x1;
    best = std::min(best, seconds_since(t0));
  }
  const bool ok = within(x1, 3.51e-12, 0.01) && best < 1e-3;
  return {ok, fmt("x1* = %.4e (target 3.51e-12 +-1%%), eps = %.6f, %.3f ms", x1, d.epsilon, best * 1e3)};
}

Outcome slow_criterion(Shared& s) {
  const double W[] = {0.05, 0.1, 0.2};
  const double target[] = {-3.17e-2, -6.34e-2, -12.7e-2};
  EigenSpectrum spec[3];
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < 3; ++k) spec[k] = fixed_point_spectrum(nondimensionalize(s.sys, FlowRate::per_minute(W[k])));
  const double dt = seconds_since(t0);
  bool ok = dt < 1e-2;
  double slow[3];
  for (int k = 0; k < 3; ++k) {
    slow[k] = slow_root(spec[k]);
    ok = ok && within(slow[k], target[k], 0.05);
    for (const auto& z : spec[k].lambda) ok = ok && z.real() < 0.0;
  }
  const double r2 = slow[1] / slow[0], r4 = slow[2] / slow[0];
  ok = ok && within(r2, 2.0, 0.02) && within(r4, 4.0, 0.02);
  return {ok, fmt("slow = %.4e, %.4e, %.4e; ratio 1:%.4f:%.4f; all Re < 0; %.3f ms", slow[0], slow[1], slow[2], r2,
                  r4, dt * 1e3)};
}

Outcome fast_criterion(Shared& s) {
  const double W[] = {0.05, 0.1, 0.2};
  const double target[] = {-8.70, -8.84, -9.13};
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const auto spec = fixed_point_spectrum(nondimensionalize(s.sys, FlowRate::per_minute(W[k])));
    const double re = spec.lambda[0].real(), im = std::abs(spec.lambda[0].imag());
    ok = ok && within(re, target[k], 0.15) && im >= 1e4 && im <= 1e6;
    detail += fmt("%sW=%.3f: %.4f +- %.4ei", k ? "; " : "", W[k], re, im);
  }
  return {ok, detail};
}

Outcome bifurcation_criterion(Shared& s) {
  const auto d = nondimensionalize(s.sys, FlowRate::per_minute(0.1));
  const auto t0 = std::chrono::steady_clock::now();
  const auto bif = bifurcation_scan(d, 1e-6, 5e-3, 400);
  const double dt = seconds_since(t0);
  const bool above = eigenvalues(jacobian(bif.x1_c * 1.001, d)).all_real();
  const bool below = !eigenvalues(jacobian(bif.x1_c * 0.999, d)).all_real();
  const bool ok = bif.x1_c > 1e-4 && bif.x1_c < 2e-3 && within(bif.x1_c, 5.72e-4, 0.25) && above && below && dt < 1.0;
  return {ok, fmt("x1_c = %.4e (target 5.72e-4 +-25%%), real above: %s, complex below: %s, %.1f ms", bif.x1_c,
                  above ? "yes" : "no", below ? "yes" : "no", dt * 1e3)};
}

Outcome phase_criterion(Shared& s) {
  const auto d = nondimensionalize(s.sys, FlowRate::per_minute(0.1));
  const auto lag = phase_lags(eigenvalues(jacobian(1e-6, d)));
  const bool ok = std::abs(lag[0] - 90.0) <= 1.0 && std::abs(lag[1] - 90.0) <= 1.0 && std::abs(lag[2] - 180.0) <= 1.0;
  return {ok, fmt("lags at x1 = 1e-6: (%.3f, %.3f, %.3f) deg, target (90, 90, 180) +-1", lag[0], lag[1], lag[2])};
}

Outcome three_case_criterion(Shared& s) {
  const double W[] = {0.05, 0.1, 0.2};
  const Case expected[] = {Case::Case1, Case::Case3, Case::Case2};
  CaseLabel lab[3];
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < 3; ++k) {
    const auto traj = integrate(s.sys, reference(W[k]), IntegratorConfig{});
    lab[k] = classify(traj, ClassifierThresholds{});
    s.balance.push_back(charge_balance_error(traj, s.sys.battery));
  }
  const double dt = seconds_since(t0);
  bool ok = dt < 30.0 && lab[0].epsilon_t < 0.3 && lab[2].epsilon_t > 0.9;
  for (int k = 0; k < 3; ++k) ok = ok && lab[k].label == expected[k];
  return {ok, fmt("W=0.05: %s (eps_t %.3f); W=0.10: %s (%d peaks); W=0.20: %s (eps_t %.3f); %.2f s",
                  std::string(to_string(lab[0].label)).c_str(), lab[0].epsilon_t,
                  std::string(to_string(lab[1].label)).c_str(), lab[1].oscillation_count,
                  std::string(to_string(lab[2].label)).c_str(), lab[2].epsilon_t, dt)};
}

Outcome sweep_criterion(Shared& s) {
  SweepSpec spec;
  spec.system = s.sys;
  spec.workers = resolve_workers(0);
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult res = run_sweep(spec);
  const double dt = seconds_since(t0);
  for (const auto& c : res.cells) s.balance.push_back(c.balance_error);

  // Separation: in every row no Case2 cell lies at lower W than a Case1 cell.
  bool separated = true;
  for (std::size_t ic = 0; ic < res.c_c0.size(); ++ic) {
    double lowest_case2 = INFINITY, highest_case1 = -INFINITY;
    for (std::size_t iw = 0; iw < res.W.size(); ++iw) {
      const auto& c = res.at(iw, ic);
      if (c.label == Case::Case2) lowest_case2 = std::min(lowest_case2, c.W);
      if (c.label == Case::Case1) highest_case1 = std::max(highest_case1, c.W);
    }
    separated = separated && highest_case1 < lowest_case2;
  }

  std::vector<BoundaryPoint> boundary;
  try {
    boundary = extract_boundary(res, res.eta);
  } catch (const EmptyBoundary&) {
  }
  // Connected: the rows with a crossing form one contiguous block.
  std::vector<std::size_t> rows;
  for (const auto& b : boundary) {
    rows.push_back(static_cast<std::size_t>(std::find(res.c_c0.begin(), res.c_c0.end(), b.c_c0) - res.c_c0.begin()));
  }
  const bool connected = !rows.empty() && rows.back() - rows.front() + 1 == rows.size();

  int case3 = 0;
  const auto points = resample_boundary(boundary, 12);
  std::string labels;
  for (const auto& p : points) {
    OperatingCondition op;
    op.W = FlowRate::per_minute(p.W_star);
    op.c_c0 = p.c_c0;
    IntegratorConfig cfg;
    cfg.t_end = cell_time_limit(s.sys, op, spec.t_end_cap);
    const auto cell = run_cell(s.sys, op, cfg, spec.thresholds);
    s.balance.push_back(cell.balance_error);
    case3 += cell.label == Case::Case3;
    labels += cell.label ? std::string(to_string(*cell.label)).substr(4) : "?";
  }
  const bool ok = separated && connected && case3 >= 9 && dt < 600.0;
  return {ok, fmt("40x20 grid in %.1f s on %d worker(s); %zu boundary rows, connected: %s, Case2 above Case1: %s; "
                  "boundary re-runs Case3 at %d of 12 (labels %s)",
                  dt, spec.workers, boundary.size(), connected ? "yes" : "no", separated ? "yes" : "no", case3,
                  labels.c_str())};
}

Outcome conservation_criterion(Shared& s) {
  const double worst = s.balance.empty() ? INFINITY : *std::max_element(s.balance.begin(), s.balance.end());
  return {worst < 1e-6, fmt("max relative charge imbalance %.3e over %zu trajectories (limit 1e-6)", worst,
                            s.balance.size())};
}

Outcome equivalence_criterion(Shared& s) {
  const auto op = reference(0.1);
  const double h = 1e-3;
  const long steps = 100000;
  const int stride = 100;
  IntegratorConfig cfg;
  cfg.t_end = 100.0;
  cfg.record_stride = stride;
  const auto first = integrate(s.sys, op, cfg);
  const PhysicalState s0{0.0, op.c_c0, op.c_c0, 0.0};
  const auto second = integrate_second_order(s.sys, op.W, to_second_order(s0, s.sys, op.W), h, steps, stride);
  const auto d = nondimensionalize(s.sys, op.W);
  const auto dimless = integrate_dimensionless(d, to_dimensionless(to_second_order(s0, s.sys, op.W), d), h / d.t_hat,
                                               steps, stride);
  double e2 = 0.0, ed = 0.0;
  for (std::size_t k = 1; k < first.samples.size(); ++k) {
    const auto& a = first.samples[k];
    const auto b = to_dimensional(dimless[k], d);
    e2 = std::max({e2, std::abs(second[k].c_c - a.c_c) / a.c_c, std::abs(second[k].i - a.i) / a.i});
    ed = std::max({ed, std::abs(b.c_c - a.c_c) / a.c_c, std::abs(b.i - a.i) / a.i});
  }
  const bool ok = e2 < 1e-6 && ed < 1e-6 && second.size() == first.samples.size();
  return {ok, fmt("max relative (c_c, i) error over 100 s: second-order %.3e, dimensionless %.3e", e2, ed)};
}

Outcome order_criterion(Shared& s) {
  // Truncation error is below rounding at h = 1e-3, so the ladder starts at
  // h = 0.1 s.
  const auto op = reference(0.1);
  auto run = [&](double h) {
    IntegratorConfig cfg;
    cfg.h = h;
    cfg.t_end = 10.0;
    cfg.record_stride = 1000000;
    return integrate(s.sys, op, cfg).samples.back();
  };
  const auto a = run(0.1), b = run(0.05), c = run(0.025);
  auto dist = [](const PhysicalState& x, const PhysicalState& y) {
    return std::max({std::abs(x.c_c - y.c_c) / y.c_c, std::abs(x.c_t - y.c_t) / y.c_t, std::abs(x.i - y.i) / y.i});
  };
  const double p = std::log2(dist(a, b) / dist(b, c));
  return {p >= 3.5 && p <= 4.5, fmt("observed order %.3f from h = 0.1, 0.05, 0.025 s", p)};
}

Outcome nullcline_criterion(Shared&) {
  const fs::path dir = fs::temp_directory_path() / "rfb_dyn_acceptance_field";
  fs::remove_all(dir);
  const std::string out = dir.string();
  const char* argv[] = {"rfb_dyn", "field", "--out", out.c_str(), "--count", "41"};
  std::ostringstream sink, err;
  if (run_cli(6, argv, sink, err) != 0) return {false, "field export failed: " + err.str()};

  const auto meta = nlohmann::json::parse(read_text(dir / "field.json"));
  const double delta = meta["dimensionless"]["delta"].get<double>();
  const double eps = meta["dimensionless"]["epsilon"].get<double>();
  std::size_t on = 0, off = 0, bad_on = 0, bad_off = 0;
  double worst_on = 0.0, min_ratio = INFINITY;
  for (const auto& f : meta["files"]) {
    const auto t = parse_csv(read_text(dir / f["file"].get<std::string>()));
    const auto kind = t.column("kind"), x1c = t.column("x1"), x3c = t.column("x3");
    const auto d1 = t.column("dx1_dtau"), d3 = t.column("dx3_dtau"), valid = t.column("valid");
    for (const auto& row : t.rows) {
      if (row[valid] != "1") continue;
      const double dx1 = parse_number(row[d1]), dx3 = parse_number(row[d3]);
      if (row[kind] == "fast_nullcline") {
        ++on;
        worst_on = std::max(worst_on, std::abs(dx3));
        bad_on += !(std::abs(dx3) < 1e-12);
      } else if (row[kind] == "grid") {
        const double x1 = parse_number(row[x1c]), x3 = parse_number(row[x3c]);
        if (std::abs(x3 - (1.0 + eps * std::log(x1 / (1.0 - x1)))) <= 0.01) continue;
        ++off;
        const double ratio = dx1 == 0.0 ? INFINITY : std::abs(dx3) / std::abs(dx1);
        min_ratio = std::min(min_ratio, ratio);
        bad_off += !(ratio > 0.1 / delta);
      }
    }
  }
  const bool ok = on > 0 && off > 0 && bad_on == 0 && bad_off == 0;
  return {ok, fmt("%zu nullcline samples, max |dx3/dtau| = %.2e; %zu off-nullcline samples, min ratio %.3e vs "
                  "0.1/delta = %.3e",
                  on, worst_on, off, min_ratio, 0.1 / delta)};
}

}  // namespace

int main() {
  Shared s;
  s.cal = calibrate(BatteryParams{});
  s.sys = calibrated_system(s.cal);

  const std::vector<std::pair<const char*, std::function<Outcome(Shared&)>>> criteria{
      {"fixed point", fixed_point_criterion},
      {"slow eigenvalues", slow_criterion},
      {"fast pair", fast_criterion},
      {"bifurcation", bifurcation_criterion},
      {"phase lags", phase_criterion},
      {"three cases", three_case_criterion},
      {"sweep map", sweep_criterion},
      {"conservation", conservation_criterion},
      {"oracle equivalence", equivalence_criterion},
      {"integrator order", order_criterion},
      {"nullclines", nullcline_criterion},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second(s);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
