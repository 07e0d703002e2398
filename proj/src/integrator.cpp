#include "rfb/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace rfb {

std::vector<std::string> IntegratorConfig::violations() const {
  std::vector<std::string> out;
  if (!(h > 0.0)) out.push_back("integrator.h must be > 0");
  if (!(t_end > 0.0)) out.push_back("integrator.t_end must be > 0");
  if (record_stride < 1) out.push_back("integrator.record_stride must be >= 1");
  if (!(current_tol > 0.0)) out.push_back("integrator.current_tol must be > 0");
  if (!(floor_fraction > 0.0 && floor_fraction < 0.5)) {
    out.push_back("integrator.floor_fraction must be in (0, 0.5)");
  }
  return out;
}

void IntegratorConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) throw InvalidParameter(v.front());
}

std::string_view to_string(EndKind k) {
  switch (k) {
    case EndKind::CurrentZero: return "CurrentZero";
    case EndKind::Depleted: return "Depleted";
    case EndKind::TimeLimit: return "TimeLimit";
    case EndKind::NumericalBlowup: return "NumericalBlowup";
  }
  return "Unknown";
}

std::optional<EndKind> end_kind_from_string(std::string_view s) {
  for (auto k : {EndKind::CurrentZero, EndKind::Depleted, EndKind::TimeLimit, EndKind::NumericalBlowup}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

double initial_current(const RfbSystem& sys, const OperatingCondition& op) {
  if (const auto* pre = std::get_if<SteadyPreload>(&op.initial_current)) {
    return nernst_emf(op.c_c0, sys.battery) / (sys.circuit.r1 + pre->r_pre);
  }
  return 0.0;
}

Trajectory integrate(const RfbSystem& sys, const OperatingCondition& op, const IntegratorConfig& cfg) {
  sys.battery.validate();
  sys.circuit.validate();
  op.validate(sys.battery);
  cfg.validate();

  const auto& p = sys.battery;
  const double floor = cfg.floor_fraction * p.c_max;
  const double ceiling = p.c_max - floor;
  const double i_hat = sys.current_scale();
  const double i_zero = cfg.current_tol * i_hat;
  const double i_armed = 2.0 * i_zero;

  Trajectory traj;
  traj.i_hat = i_hat;
  traj.current_tol = cfg.current_tol;

  // y = (c_c, c_t, i, q); q = integral of i dt is carried along so charge
  // balance can be checked exactly on the stored samples.
  using Vec4 = std::array<double, 4>;
  auto rhs = [&](const Vec4& y) -> Vec4 {
    const auto r = state_rhs({.t = 0.0, .c_c = y[0], .c_t = y[1], .i = y[2]}, sys, op.W);
    return {r.dc_c, r.dc_t, r.di, y[2]};
  };
  auto admissible = [&](const Vec4& y) {
    return y[0] >= floor && y[0] <= ceiling && y[1] >= floor && y[1] <= ceiling;
  };

  Vec4 y{op.c_c0, op.c_c0, initial_current(sys, op), 0.0};
  double t = 0.0;
  const long n_steps = static_cast<long>(std::ceil(cfg.t_end / cfg.h - 1e-9));
  traj.samples.reserve(static_cast<std::size_t>(n_steps / cfg.record_stride + 2));
  traj.charge.reserve(traj.samples.capacity());
  auto store = [&] {
    traj.samples.push_back({t, y[0], y[1], y[2]});
    traj.charge.push_back(y[3]);
  };
  store();

  bool armed = y[2] > i_armed;
  traj.end = {EndKind::TimeLimit, static_cast<double>(n_steps) * cfg.h};
  for (long k = 1; k <= n_steps; ++k) {
    std::optional<Vec4> next;
    try {
      next = rk4_step_checked(rhs, y, cfg.h, admissible);
    } catch (const NumericalBlowup&) {
      traj.end = {EndKind::NumericalBlowup, t};
      break;
    }
    if (!next) {
      traj.end = {EndKind::Depleted, t};
      break;
    }
    y = *next;
    t = static_cast<double>(k) * cfg.h;
    if (k % cfg.record_stride == 0) store();
    if (y[2] > i_armed) armed = true;
    if (armed && y[2] < i_zero) {
      traj.end = {EndKind::CurrentZero, t};
      break;
    }
  }
  if (traj.samples.back().t < t) store();

  traj.emf.reserve(traj.samples.size());
  for (const auto& s : traj.samples) traj.emf.push_back(nernst_emf(s.c_c, p));
  return traj;
}

std::vector<SecondOrderState> integrate_second_order(const RfbSystem& sys, FlowRate W,
                                                     const SecondOrderState& s0, double h,
                                                     long steps, int stride) {
  auto rhs = [&](const Vec3& y) -> Vec3 {
    const auto r = second_order_rhs({.t = 0.0, .c_c = y[0], .v = y[1], .i = y[2]}, sys, W);
    return {r.dc_c, r.dv, r.di};
  };
  std::vector<SecondOrderState> out{s0};
  Vec3 y{s0.c_c, s0.v, s0.i};
  for (long k = 1; k <= steps; ++k) {
    y = rk4_step(rhs, y, h);
    if (k % stride == 0) out.push_back({s0.t + static_cast<double>(k) * h, y[0], y[1], y[2]});
  }
  return out;
}

std::vector<DimensionlessState> integrate_dimensionless(const DimensionlessParams& d,
                                                        const DimensionlessState& x0, double dtau,
                                                        long steps, int stride) {
  auto rhs = [&](const Vec3& y) -> Vec3 {
    return dimensionless_rhs({.tau = 0.0, .x1 = y[0], .x2 = y[1], .x3 = y[2]}, d);
  };
  std::vector<DimensionlessState> out{x0};
  Vec3 y{x0.x1, x0.x2, x0.x3};
  for (long k = 1; k <= steps; ++k) {
    y = rk4_step(rhs, y, dtau);
    if (k % stride == 0) out.push_back({x0.tau + static_cast<double>(k) * dtau, y[0], y[1], y[2]});
  }
  return out;
}

double charge_balance_error(const Trajectory& traj, const BatteryParams& p) {
  if (traj.samples.empty() || traj.charge.size() != traj.samples.size()) {
    throw std::invalid_argument("charge_balance_error: trajectory has no charge series");
  }
  const auto& first = traj.samples.front();
  const double content0 = ion_content(first, p);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    worst = std::max(worst, std::abs(ion_content(traj.samples[k], p) - content0 + traj.charge[k] / p.F));
  }
  return worst / (p.alpha_t * first.c_t);
}

DischargeEnd detect_discharge_end(const Trajectory& traj, double tol) {
  if (traj.samples.empty()) throw std::invalid_argument("detect_discharge_end: empty trajectory");
  const auto& last = traj.samples.back();
  if (traj.end.kind == EndKind::Depleted) return {traj.end.t, last.c_t, true};

  const double i_zero = tol * traj.i_hat;
  bool armed = false;
  for (const auto& s : traj.samples) {
    if (s.i > 2.0 * i_zero) armed = true;
    if (armed && s.i < i_zero) return {s.t, s.c_t, true};
  }
  if (!armed) throw NoDischarge("current never exceeded twice the zero threshold");
  return {last.t, last.c_t, false};
}

}  // namespace rfb
