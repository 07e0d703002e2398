#include "rfb/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace rfb {

std::vector<double> GridAxis::values() const {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    const double s = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out[static_cast<std::size_t>(k)] =
        log_spaced ? std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo))) : lo + s * (hi - lo);
  }
  if (count >= 2) {
    out.front() = lo;
    out.back() = hi;
  }
  return out;
}

std::vector<std::string> SweepSpec::violations() const {
  std::vector<std::string> out = system.battery.violations();
  for (auto& v : system.circuit.violations()) out.push_back(std::move(v));
  for (auto& v : integrator.violations()) out.push_back(std::move(v));
  for (auto& v : thresholds.violations()) out.push_back(std::move(v));
  if (W.count < 2 || c_c0.count < 2) out.push_back("sweep grid counts must be >= 2");
  if (!(W.lo > 0.0 && W.lo < W.hi)) out.push_back("sweep W range must satisfy 0 < lo < hi");
  if (!(c_c0.lo > 0.0 && c_c0.lo < c_c0.hi && c_c0.hi < system.battery.c_max)) {
    out.push_back("sweep c_c0 range must satisfy 0 < lo < hi < c_max");
  }
  if (!(t_end_cap > 0.0)) out.push_back("sweep t_end_cap must be > 0");
  if (workers < 0) out.push_back("sweep workers must be >= 0");
  return out;
}

void SweepSpec::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
  throw InvalidParameter(msg);
}

SweepSpec SweepSpec::full_resolution() {
  SweepSpec s;
  s.W.count = 200;
  s.c_c0.count = 100;
  return s;
}

double cell_time_limit(const RfbSystem& sys, const OperatingCondition& op, double cap) {
  const auto& p = sys.battery;
  const double drain = p.F * (p.alpha_c + p.alpha_t) * op.c_c0 / (0.5 * sys.current_scale());
  const double w = op.W.litres_per_second();
  const double turnover = w > 0.0 ? 10.0 * p.alpha_t / w : cap;
  return std::min(cap, drain + turnover);
}

SweepCell run_cell(const RfbSystem& sys, const OperatingCondition& op, const IntegratorConfig& cfg,
                   const ClassifierThresholds& th) {
  SweepCell cell;
  cell.W = op.W.litres_per_minute();
  cell.c_c0 = op.c_c0;
  const Trajectory traj = integrate(sys, op, cfg);
  cell.end = traj.end.kind;
  cell.balance_error = charge_balance_error(traj, sys.battery);
  try {
    const CaseLabel lab = classify(traj, th);
    cell.label = lab.label;
    cell.epsilon_t = lab.epsilon_t;
    cell.oscillation_count = lab.oscillation_count;
    cell.t_f = lab.t_f;
    cell.complete = lab.complete;
  } catch (const Unclassifiable& e) {
    cell.epsilon_t = std::numeric_limits<double>::quiet_NaN();
    cell.t_f = traj.end.t;
    cell.complete = false;
    cell.error = e.what();
  }
  return cell;
}

int resolve_workers(int fallback) {
  if (const char* env = std::getenv("RFB_DYN_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
  }
  if (fallback > 0) return fallback;
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult res;
  res.W = spec.W.values();
  res.c_c0 = spec.c_c0.values();
  res.eta = spec.thresholds.eta;
  const std::size_t nw = res.W.size();
  const std::size_t n = nw * res.c_c0.size();
  res.cells.resize(n);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      OperatingCondition op;
      op.W = FlowRate::per_minute(res.W[k % nw]);
      op.c_c0 = res.c_c0[k / nw];
      op.initial_current = spec.initial_current;
      IntegratorConfig cfg = spec.integrator;
      cfg.t_end = cell_time_limit(spec.system, op, spec.t_end_cap);
      res.cells[k] = run_cell(spec.system, op, cfg, spec.thresholds);
    }
  };

  const int workers = std::min<int>(resolve_workers(spec.workers), static_cast<int>(n));
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  return res;
}

std::vector<BoundaryPoint> extract_boundary(const SweepResult& result, double eta) {
  const std::size_t nw = result.W.size(), nc = result.c_c0.size();
  if (nw < 2 || nc < 2) throw InvalidParameter("extract_boundary: grid must be at least 2 x 2");
  std::vector<BoundaryPoint> out;
  for (std::size_t ic = 0; ic < nc; ++ic) {
    for (std::size_t iw = nw - 1; iw-- > 0;) {
      const double e0 = result.at(iw, ic).epsilon_t;
      const double e1 = result.at(iw + 1, ic).epsilon_t;
      if (!(e0 < eta && e1 >= eta)) continue;
      const double s = (eta - e0) / (e1 - e0);
      out.push_back({result.c_c0[ic], result.W[iw] + s * (result.W[iw + 1] - result.W[iw])});
      break;
    }
  }
  if (out.empty()) throw EmptyBoundary("no pair of cells straddles eta");
  return out;
}

std::vector<BoundaryPoint> resample_boundary(const std::vector<BoundaryPoint>& poly, int n) {
  if (poly.empty() || n < 1) return {};
  if (poly.size() == 1 || n == 1) return std::vector<BoundaryPoint>(static_cast<std::size_t>(n), poly.front());

  double c_lo = poly.front().c_c0, c_hi = c_lo, w_lo = poly.front().W_star, w_hi = w_lo;
  for (const auto& p : poly) {
    c_lo = std::min(c_lo, p.c_c0);
    c_hi = std::max(c_hi, p.c_c0);
    w_lo = std::min(w_lo, p.W_star);
    w_hi = std::max(w_hi, p.W_star);
  }
  const double sc = c_hi > c_lo ? c_hi - c_lo : 1.0;
  const double sw = w_hi > w_lo ? w_hi - w_lo : 1.0;

  std::vector<double> s(poly.size(), 0.0);
  for (std::size_t k = 1; k < poly.size(); ++k) {
    s[k] = s[k - 1] + std::hypot((poly[k].c_c0 - poly[k - 1].c_c0) / sc, (poly[k].W_star - poly[k - 1].W_star) / sw);
  }
  std::vector<BoundaryPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t seg = 1;
  for (int j = 0; j < n; ++j) {
    const double target = s.back() * j / (n - 1);
    while (seg + 1 < s.size() && s[seg] < target) ++seg;
    const double len = s[seg] - s[seg - 1];
    const double u = len > 0.0 ? std::clamp((target - s[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back({poly[seg - 1].c_c0 + u * (poly[seg].c_c0 - poly[seg - 1].c_c0),
                   poly[seg - 1].W_star + u * (poly[seg].W_star - poly[seg - 1].W_star)});
  }
  return out;
}

}  // namespace rfb
