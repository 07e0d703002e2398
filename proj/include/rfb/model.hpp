// Vanadium redox flow battery discharging into an R-L circuit.
//
// Physical model: a cell of volume alpha_c exchanging electrolyte with a tank
// of volume alpha_t at flow rate W, with the cell EMF given by a Nernst
// relation in the cell concentration c_c, driving current i through the
// series resistance r1 + r2 and inductance L. Positive i is discharge.
//
// All quantities are SI except concentrations (mol/L), volumes (L) and the
// user-facing flow rate (L/min, see FlowRate).

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rfb {

/// Raised when an argument lies outside the domain of a model equation
/// (the Nernst logarithm is singular at c_c = 0 and c_c = c_max).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a parameter record violates its invariants.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace constants {
inline constexpr double kFaraday = 96485.33212;     // C/mol
inline constexpr double kGasConstant = 8.314462618;  // J/(mol K)
}  // namespace constants

// Circuit and EMF values recovered by analysis::calibrate() from the reported
// fixed point and linearised spectrum at W = 0.050 L/min. They are derived,
// not measured; test_analysis checks calibrate() reproduces them.
namespace calibrated {
inline constexpr double kEquilibriumEmf = 1.395533924700401;     // V
inline constexpr double kInductance = 0.09972320245445992;       // H
inline constexpr double kTotalResistance = 0.04985198890825045;   // Ohm
}  // namespace calibrated

/// Flow rate. Stored in the unit the user supplies (L/min); the model
/// equations only ever see litres_per_second().
class FlowRate {
 public:
  constexpr FlowRate() = default;
  static constexpr FlowRate per_minute(double litres) { return FlowRate(litres); }
  static constexpr FlowRate per_second(double litres) { return FlowRate(litres * 60.0); }

  constexpr double litres_per_minute() const { return lpm_; }
  constexpr double litres_per_second() const { return lpm_ / 60.0; }

  friend constexpr bool operator==(FlowRate, FlowRate) = default;

 private:
  constexpr explicit FlowRate(double lpm) : lpm_(lpm) {}
  double lpm_ = 0.0;
};

struct BatteryParams {
  double alpha_c = 0.100;  //!< cell volume [L]
  double alpha_t = 0.900;  //!< tank volume [L]
  double T = 307.0;        //!< temperature [K]
  double c_max = 1.70;     //!< maximum cell concentration [mol/L]
  double E_e0 = calibrated::kEquilibriumEmf;  //!< EMF at c_c = c_max/2 [V]
  double F = constants::kFaraday;             //!< [C/mol]
  double R = constants::kGasConstant;         //!< [J/(mol K)]
  std::optional<double> emf_slope_override;   //!< replaces 2RT/F when set [V]

  /// Prefactor of the Nernst logarithm, 2RT/F unless overridden [V].
  double emf_slope() const { return emf_slope_override ? *emf_slope_override : 2.0 * R * T / F; }

  std::vector<std::string> violations() const;
  void validate() const;
};

struct CircuitParams {
  double r1 = 0.0;                              //!< source-side resistance [Ohm]
  double r2 = calibrated::kTotalResistance;     //!< load resistance [Ohm]
  double L_ind = calibrated::kInductance;       //!< inductance [H]

  double r_total() const { return r1 + r2; }

  std::vector<std::string> violations() const;
  void validate() const;
};

/// Battery plus external circuit; everything the right-hand sides need
/// besides the flow rate.
struct RfbSystem {
  BatteryParams battery;
  CircuitParams circuit;

  /// Current scale E_e0 / (r1 + r2) [A].
  double current_scale() const { return battery.E_e0 / circuit.r_total(); }
};

struct OpenSwitch {};
struct SteadyPreload {
  double r_pre = 1.0;  //!< pre-step load resistance [Ohm]
};
using InitialCurrentMode = std::variant<OpenSwitch, SteadyPreload>;

struct OperatingCondition {
  FlowRate W = FlowRate::per_minute(0.100);
  double c_c0 = 0.125;  //!< initial cell (= tank) concentration [mol/L]
  InitialCurrentMode initial_current = OpenSwitch{};

  std::vector<std::string> violations(const BatteryParams& p) const;
  void validate(const BatteryParams& p) const;
};

struct PhysicalState {
  double t = 0.0;    //!< [s]
  double c_c = 0.0;  //!< cell concentration [mol/L]
  double c_t = 0.0;  //!< tank concentration [mol/L]
  double i = 0.0;    //!< current [A]
};

struct PhysicalRate {
  double dc_c = 0.0;  //!< [mol/(L s)]
  double dc_t = 0.0;  //!< [mol/(L s)]
  double di = 0.0;    //!< [A/s]
};

/// Cell concentration with its rate, the second-order representation.
struct SecondOrderState {
  double t = 0.0;
  double c_c = 0.0;
  double v = 0.0;  //!< dc_c/dt [mol/(L s)]
  double i = 0.0;
};

struct SecondOrderRate {
  double dc_c = 0.0;
  double dv = 0.0;  //!< d2c_c/dt2 [mol/(L s^2)]
  double di = 0.0;
};

struct DimensionlessParams {
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;    //!< t_hat_prime / t_hat
  double epsilon = 0.0;  //!< emf_slope / E_e0
  double c_hat = 0.0;    //!< [mol/L]
  double t_hat = 0.0;    //!< [s]
  double i_hat = 0.0;    //!< [A]
  double t_hat_prime = 0.0;  //!< circuit time constant L/(r1+r2) [s]
};

struct DimensionlessState {
  double tau = 0.0;
  double x1 = 0.0;  //!< c_c / c_hat
  double x2 = 0.0;  //!< (dc_c/dt) t_hat / c_hat
  double x3 = 0.0;  //!< i / i_hat
};

using Vec3 = std::array<double, 3>;
using Matrix3 = std::array<Vec3, 3>;

/// Cell EMF E_e0 + (2RT/F) ln(c_c / (c_max - c_c)). Throws DomainError
/// outside 0 < c_c < c_max.
double nernst_emf(double c_c, const BatteryParams& p);

/// Dimensionless EMF 1 + eps ln(x1 / (1 - x1)); equals nernst_emf / E_e0 at
/// c_c = c_max x1.
double nernst_dimensionless(double x1, double epsilon);

/// d/dx1 of nernst_dimensionless: eps / (x1 (1 - x1)).
double emf_gradient(double x1, double epsilon);

/// First-order right-hand side in (c_c, c_t, i):
///   dc_c/dt = (W/alpha_c)(c_t - c_c) - i/(alpha_c F)
///   dc_t/dt = (W/alpha_t)(c_c - c_t)
///   di/dt   = -((r1 + r2) i - E(c_c)) / L
PhysicalRate state_rhs(const PhysicalState& s, const RfbSystem& sys, FlowRate W);

/// Second-order right-hand side in (c_c, dc_c/dt, i); the tank is eliminated.
SecondOrderRate second_order_rhs(const SecondOrderState& s, const RfbSystem& sys, FlowRate W);

DimensionlessParams nondimensionalize(const RfbSystem& sys, FlowRate W);

/// Derivatives of (x1, x2, x3) with respect to tau.
Vec3 dimensionless_rhs(const DimensionlessState& x, const DimensionlessParams& d);

/// Linearisation of dimensionless_rhs in (x1, x2, x3) at cell level x1.
Matrix3 jacobian(double x1, const DimensionlessParams& d);

/// dc_c/dt implied by a first-order state.
double cell_rate(const PhysicalState& s, const RfbSystem& sys, FlowRate W);

SecondOrderState to_second_order(const PhysicalState& s, const RfbSystem& sys, FlowRate W);
DimensionlessState to_dimensionless(const SecondOrderState& s, const DimensionlessParams& d);
SecondOrderState to_dimensional(const DimensionlessState& x, const DimensionlessParams& d);

/// Total ion content alpha_c c_c + alpha_t c_t [mol].
inline double ion_content(const PhysicalState& s, const BatteryParams& p) {
  return p.alpha_c * s.c_c + p.alpha_t * s.c_t;
}

}  // namespace rfb
