#include "rfb/model.hpp"

#include <cmath>
#include <sstream>

namespace rfb {

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_positive(std::vector<std::string>& out, const char* name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    out.push_back(std::string(name) + " must be > 0 (got " + format_value(v) + ")");
  }
}

void throw_if_any(const std::vector<std::string>& v) {
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) {
    if (!msg.empty()) msg += "; ";
    msg += s;
  }
  throw InvalidParameter(msg);
}

}  // namespace

std::vector<std::string> BatteryParams::violations() const {
  std::vector<std::string> out;
  require_positive(out, "battery.alpha_c", alpha_c);
  require_positive(out, "battery.alpha_t", alpha_t);
  require_positive(out, "battery.T", T);
  require_positive(out, "battery.c_max", c_max);
  require_positive(out, "battery.E_e0", E_e0);
  require_positive(out, "battery.F", F);
  require_positive(out, "battery.R", R);
  if (emf_slope_override) require_positive(out, "battery.emf_slope", *emf_slope_override);
  return out;
}

void BatteryParams::validate() const { throw_if_any(violations()); }

std::vector<std::string> CircuitParams::violations() const {
  std::vector<std::string> out;
  if (!(r1 >= 0.0)) out.push_back("circuit.r1 must be >= 0 (got " + format_value(r1) + ")");
  if (!(r2 >= 0.0)) out.push_back("circuit.r2 must be >= 0 (got " + format_value(r2) + ")");
  if (!(r1 + r2 > 0.0)) out.push_back("circuit.r1 + circuit.r2 must be > 0");
  require_positive(out, "circuit.L", L_ind);
  return out;
}

void CircuitParams::validate() const { throw_if_any(violations()); }

std::vector<std::string> OperatingCondition::violations(const BatteryParams& p) const {
  std::vector<std::string> out;
  const double w = W.litres_per_minute();
  if (!(w >= 0.0) || !std::isfinite(w)) {
    out.push_back("operating.W must be >= 0 (got " + format_value(w) + ")");
  }
  if (!(c_c0 > 0.0 && c_c0 < p.c_max)) {
    out.push_back("operating.c_c0 must satisfy 0 < c_c0 < c_max = " + format_value(p.c_max) +
                  " (got " + format_value(c_c0) + ")");
  }
  if (const auto* pre = std::get_if<SteadyPreload>(&initial_current)) {
    if (!(pre->r_pre > 0.0)) {
      out.push_back("operating.r_pre must be > 0 (got " + format_value(pre->r_pre) + ")");
    }
  }
  return out;
}

void OperatingCondition::validate(const BatteryParams& p) const { throw_if_any(violations(p)); }

double nernst_emf(double c_c, const BatteryParams& p) {
  if (!(c_c > 0.0 && c_c < p.c_max)) {
    throw DomainError("nernst_emf: c_c = " + format_value(c_c) + " outside (0, c_max)");
  }
  return p.E_e0 + p.emf_slope() * std::log(c_c / (p.c_max - c_c));
}

double nernst_dimensionless(double x1, double epsilon) {
  if (!(x1 > 0.0 && x1 < 1.0)) {
    throw DomainError("nernst_dimensionless: x1 = " + format_value(x1) + " outside (0, 1)");
  }
  return 1.0 + epsilon * std::log(x1 / (1.0 - x1));
}

double emf_gradient(double x1, double epsilon) {
  if (!(x1 > 0.0 && x1 < 1.0)) {
    throw DomainError("emf_gradient: x1 = " + format_value(x1) + " outside (0, 1)");
  }
  return epsilon / (x1 * (1.0 - x1));
}

double cell_rate(const PhysicalState& s, const RfbSystem& sys, FlowRate W) {
  const auto& p = sys.battery;
  const double w = W.litres_per_second();
  return w / p.alpha_c * (s.c_t - s.c_c) - s.i / (p.alpha_c * p.F);
}

PhysicalRate state_rhs(const PhysicalState& s, const RfbSystem& sys, FlowRate W) {
  const auto& p = sys.battery;
  const auto& c = sys.circuit;
  const double w = W.litres_per_second();
  const double emf = nernst_emf(s.c_c, p);
  return {
      .dc_c = cell_rate(s, sys, W),
      .dc_t = w / p.alpha_t * (s.c_c - s.c_t),
      .di = -(c.r_total() * s.i - emf) / c.L_ind,
  };
}

SecondOrderRate second_order_rhs(const SecondOrderState& s, const RfbSystem& sys, FlowRate W) {
  const auto& p = sys.battery;
  const auto& c = sys.circuit;
  const double w = W.litres_per_second();
  const double emf = nernst_emf(s.c_c, p);
  const double aF = p.alpha_c * p.F;
  return {
      .dc_c = s.v,
      .dv = -w * (1.0 / p.alpha_c + 1.0 / p.alpha_t) * s.v +
            (c.r_total() / c.L_ind - w / p.alpha_t) * s.i / aF - emf / (aF * c.L_ind),
      .di = -(c.r_total() * s.i - emf) / c.L_ind,
  };
}

DimensionlessParams nondimensionalize(const RfbSystem& sys, FlowRate W) {
  sys.battery.validate();
  sys.circuit.validate();
  const auto& p = sys.battery;
  const auto& c = sys.circuit;
  const double w = W.litres_per_second();
  if (!(w >= 0.0)) throw InvalidParameter("nondimensionalize: W must be >= 0");

  DimensionlessParams d;
  d.c_hat = p.c_max;
  d.t_hat = std::sqrt(p.alpha_c * p.F * c.L_ind * p.c_max / p.E_e0);
  d.i_hat = p.E_e0 / c.r_total();
  d.t_hat_prime = c.L_ind / c.r_total();
  d.beta = w * (1.0 / p.alpha_c + 1.0 / p.alpha_t) * d.t_hat;
  d.gamma = w * c.L_ind / (p.alpha_t * c.r_total());
  d.delta = d.t_hat_prime / d.t_hat;
  d.epsilon = p.emf_slope() / p.E_e0;
  return d;
}

Vec3 dimensionless_rhs(const DimensionlessState& x, const DimensionlessParams& d) {
  const double n = nernst_dimensionless(x.x1, d.epsilon);
  return {
      x.x2,
      -d.beta * x.x2 + (1.0 - d.gamma) * x.x3 - n,
      (-x.x3 + n) / d.delta,
  };
}

Matrix3 jacobian(double x1, const DimensionlessParams& d) {
  const double f = emf_gradient(x1, d.epsilon);
  return {{
      {0.0, 1.0, 0.0},
      {-f, -d.beta, 1.0 - d.gamma},
      {f / d.delta, 0.0, -1.0 / d.delta},
  }};
}

SecondOrderState to_second_order(const PhysicalState& s, const RfbSystem& sys, FlowRate W) {
  return {.t = s.t, .c_c = s.c_c, .v = cell_rate(s, sys, W), .i = s.i};
}

DimensionlessState to_dimensionless(const SecondOrderState& s, const DimensionlessParams& d) {
  return {
      .tau = s.t / d.t_hat,
      .x1 = s.c_c / d.c_hat,
      .x2 = s.v * d.t_hat / d.c_hat,
      .x3 = s.i / d.i_hat,
  };
}

SecondOrderState to_dimensional(const DimensionlessState& x, const DimensionlessParams& d) {
  return {
      .t = x.tau * d.t_hat,
      .c_c = x.x1 * d.c_hat,
      .v = x.x2 * d.c_hat / d.t_hat,
      .i = x.x3 * d.i_hat,
  };
}

}  // namespace rfb
