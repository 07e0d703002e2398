// Fixed-step classical Runge-Kutta integration of the RFB circuit model with
// per-step event detection.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rfb/model.hpp"

namespace rfb {

class NumericalBlowup : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The current never rose above twice the zero threshold.
class NoDischarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegratorConfig {
  double h = 1e-3;            //!< step size [s]
  double t_end = 5000.0;      //!< integration horizon [s]
  int record_stride = 100;    //!< steps per stored sample
  double current_tol = 1e-2;  //!< current-zero threshold, fraction of i_hat
  double floor_fraction = 1e-13;  //!< depletion floor c_floor / c_max

  std::vector<std::string> violations() const;
  void validate() const;
};

enum class EndKind { CurrentZero, Depleted, TimeLimit, NumericalBlowup };

std::string_view to_string(EndKind k);
std::optional<EndKind> end_kind_from_string(std::string_view s);

struct EndEvent {
  EndKind kind = EndKind::TimeLimit;
  double t = 0.0;  //!< [s]
};

struct Trajectory {
  std::vector<PhysicalState> samples;  //!< stored every record_stride steps, plus the final state
  std::vector<double> emf;             //!< nernst_emf of each sample's c_c [V]
  std::vector<double> charge;          //!< delivered charge since t = 0 per sample [C]
  EndEvent end;
  double i_hat = 0.0;        //!< current scale the thresholds refer to [A]
  double current_tol = 0.0;  //!< threshold used for CurrentZero, fraction of i_hat
};

namespace detail {

template <std::size_t N>
std::array<double, N> axpy(const std::array<double, N>& y, double a, const std::array<double, N>& k) {
  std::array<double, N> out;
  for (std::size_t j = 0; j < N; ++j) out[j] = y[j] + a * k[j];
  return out;
}

template <std::size_t N>
bool all_finite(const std::array<double, N>& y) {
  for (double v : y) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace detail

/// One RK4 step of the autonomous system y' = rhs(y). Every stage argument
/// and the result are screened by `admissible`; returns nullopt as soon as
/// one is rejected, without evaluating rhs there. Throws NumericalBlowup if
/// the result is not finite.
template <std::size_t N, class Rhs, class Admissible>
std::optional<std::array<double, N>> rk4_step_checked(Rhs&& rhs, const std::array<double, N>& y,
                                                      double h, Admissible&& admissible) {
  const std::array<double, N> k1 = rhs(y);
  const auto y2 = detail::axpy(y, 0.5 * h, k1);
  if (!admissible(y2)) return std::nullopt;
  const std::array<double, N> k2 = rhs(y2);
  const auto y3 = detail::axpy(y, 0.5 * h, k2);
  if (!admissible(y3)) return std::nullopt;
  const std::array<double, N> k3 = rhs(y3);
  const auto y4 = detail::axpy(y, h, k3);
  if (!admissible(y4)) return std::nullopt;
  const std::array<double, N> k4 = rhs(y4);

  std::array<double, N> out;
  for (std::size_t j = 0; j < N; ++j) {
    out[j] = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  if (!detail::all_finite(out)) throw NumericalBlowup("rk4_step: non-finite state");
  if (!admissible(out)) return std::nullopt;
  return out;
}

template <std::size_t N, class Rhs>
std::array<double, N> rk4_step(Rhs&& rhs, const std::array<double, N>& y, double h) {
  return *rk4_step_checked(rhs, y, h, [](const std::array<double, N>&) { return true; });
}

/// Initial loop current for the chosen mode: 0 for OpenSwitch, the steady
/// pre-step current E(c_c0) / (r1 + r_pre) for SteadyPreload.
double initial_current(const RfbSystem& sys, const OperatingCondition& op);

/// Integrates the first-order model from c_c = c_t = c_c0 until the current
/// falls to zero after discharging, a concentration reaches the floor, the
/// state stops being finite, or t_end. Failures are recorded in `end`, never
/// thrown, so callers sweeping many conditions see every outcome.
Trajectory integrate(const RfbSystem& sys, const OperatingCondition& op, const IntegratorConfig& cfg);

/// Plain fixed-step march of the second-order form; stores every `stride`
/// steps including the initial state. Throws DomainError if c_c leaves
/// (0, c_max).
std::vector<SecondOrderState> integrate_second_order(const RfbSystem& sys, FlowRate W,
                                                     const SecondOrderState& s0, double h,
                                                     long steps, int stride);

/// Same for the dimensionless system, stepping in tau.
std::vector<DimensionlessState> integrate_dimensionless(const DimensionlessParams& d,
                                                        const DimensionlessState& x0, double dtau,
                                                        long steps, int stride);

/// Largest |delta(alpha_c c_c + alpha_t c_t) + q/F| over the stored samples,
/// relative to the initial tank content alpha_t c_t0.
double charge_balance_error(const Trajectory& traj, const BatteryParams& p);

struct DischargeEnd {
  double t_f = 0.0;    //!< [s]
  double c_tf = 0.0;   //!< tank concentration at t_f [mol/L]
  bool complete = true;  //!< false when the run stopped on TimeLimit or blowup
};

/// Locates the end of discharge. Depletion ends it at the event time;
/// otherwise the first stored sample whose current is below tol * i_hat after
/// having exceeded 2 tol * i_hat. Throws NoDischarge if the current never
/// exceeded 2 tol * i_hat.
DischargeEnd detect_discharge_end(const Trajectory& traj, double tol);

}  // namespace rfb
