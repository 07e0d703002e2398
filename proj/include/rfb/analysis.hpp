// Dynamical analysis of the dimensionless system: fixed point, spectrum of
// the linearisation, the real/complex transition along x1, phase lags,
// transient classification, vector-field slices and parameter calibration.

#pragma once

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rfb/integrator.hpp"
#include "rfb/model.hpp"

namespace rfb {

class NoBifurcation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Unclassifiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Fixed point and spectrum

/// The unique equilibrium: x2 = x3 = 0 and 1 + eps ln(x1/(1-x1)) = 0, located
/// by bisection in ln x1.
DimensionlessState fixed_point(const DimensionlessParams& d);

/// Monic cubic lambda^3 + c2 lambda^2 + c1 lambda + c0.
struct Cubic {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;

  std::complex<double> operator()(std::complex<double> z) const { return ((z + c2) * z + c1) * z + c0; }
  /// Positive: three distinct real roots; negative: one real root and a
  /// complex-conjugate pair.
  double discriminant() const;
};

Cubic characteristic_polynomial(const Matrix3& a);

struct EigenSpectrum {
  /// Ordered by descending |Im|, then ascending Re, then positive Im first.
  std::array<std::complex<double>, 3> lambda;

  Cubic reconstructed() const;
  bool all_real() const;
};

/// Roots of the characteristic cubic in closed form (trigonometric or
/// Cardano), each polished by one Newton step.
EigenSpectrum eigenvalues(const Matrix3& a);
EigenSpectrum cubic_roots(const Cubic& p);

/// Spectrum of the linearisation at the fixed point.
EigenSpectrum fixed_point_spectrum(const DimensionlessParams& d);

/// arg(lambda) in degrees in [0, 180], upper-half-plane representative.
std::array<double, 3> phase_lags(const EigenSpectrum& s);

// ---------------------------------------------------------------------------
// Real/complex transition along x1

struct BifurcationBranchPoint {
  double x1 = 0.0;
  double discriminant = 0.0;
  EigenSpectrum spectrum;
};

struct BifurcationResult {
  double x1_c = 0.0;
  double discriminant_at_x1_c = 0.0;
  std::vector<BifurcationBranchPoint> branch;  //!< log-spaced samples over the range
};

/// Scans the Jacobian's cubic discriminant over log-spaced x1 in [x1_lo,
/// x1_hi] and bisects the first sign change to relative tolerance 1e-6.
/// Throws NoBifurcation if the sign never changes.
BifurcationResult bifurcation_scan(const DimensionlessParams& d, double x1_lo, double x1_hi,
                                   int n_samples);

// ---------------------------------------------------------------------------
// Transient classification

enum class Case { Case1, Case2, Case3 };
std::string_view to_string(Case c);
std::optional<Case> case_from_string(std::string_view s);

struct ClassifierThresholds {
  int n_osc = 1;        //!< post-transient current maxima needed for Case3
  double p_osc = 1e-3;  //!< minimum peak prominence, fraction of i_hat
  double eta = 0.95;    //!< consumption rate separating Case2 from Case1

  std::vector<std::string> violations() const;
};

struct CaseLabel {
  Case label = Case::Case1;
  double epsilon_t = 0.0;
  int oscillation_count = 0;
  double t_f = 0.0;
  bool complete = true;  //!< false if the run hit its time limit or blew up
};

/// Fraction of tank ions used: (c_t0 - c_tf) / c_t0.
double consumption_rate(double c_t0, double c_tf);

/// Prominent local maxima of the current after the switch-on peak, up to the
/// end of discharge.
int count_oscillations(const Trajectory& traj, double t_f, double min_prominence);

/// Case3 if the current oscillates, else Case2 if the tank was drained to at
/// least eta, else Case1. Throws Unclassifiable if the cell never discharged.
CaseLabel classify(const Trajectory& traj, const ClassifierThresholds& th);

// ---------------------------------------------------------------------------
// Vector-field slices

enum class Axis { X1 = 0, X2 = 1, X3 = 2 };

struct Plane {
  Axis axis = Axis::X2;
  double level = 0.0;
};

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;
};

struct FieldSample {
  Vec3 x{};
  Vec3 dx{};        //!< d/dtau of (x1, x2, x3); zero when !valid
  bool valid = true;  //!< false where x1 is outside (0, 1)
};

struct FieldSlice {
  Plane plane;
  std::array<Axis, 2> in_plane{};  //!< the two free axes, ascending
  std::vector<FieldSample> grid;   //!< row-major, second in-plane axis fastest
  std::vector<FieldSample> slow_nullcline;  //!< dx1/dtau = 0, i.e. x2 = 0
  std::vector<FieldSample> fast_nullcline;  //!< dx3/dtau = 0, i.e. x3 = N(x1)
};

/// Samples dimensionless_rhs on a lattice in the plane and traces both
/// nullclines through it.
FieldSlice vector_field_slice(const DimensionlessParams& d, const Plane& plane,
                              const AxisRange& first, const AxisRange& second);

// ---------------------------------------------------------------------------
// Calibration of the circuit and EMF parameters

struct CalibrationTargets {
  double fixed_point_x1 = 3.51e-12;
  FlowRate W = FlowRate::per_minute(0.050);
  double slow_eigenvalue = -3.17e-2;
  double fast_real_part = -8.70;
};

struct CalibrationResult {
  double E_e0 = 0.0;     //!< [V]
  double L_ind = 0.0;    //!< [H]
  double r_total = 0.0;  //!< [Ohm]
  double epsilon = 0.0;
  double t_hat = 0.0;
  // Forward-model values and relative residuals against the targets.
  double fixed_point_x1 = 0.0;
  double slow_eigenvalue = 0.0;
  double fast_real_part = 0.0;
  double residual_fixed_point = 0.0;
  double residual_slow = 0.0;
  double residual_fast = 0.0;
};

/// Recovers (E_e0, L, r1 + r2) for the given battery from the targets:
/// eps from the fixed point in closed form, t_hat from the slow eigenvalue,
/// and 1/delta from the trace. Throws CalibrationMismatch if the forward model
/// misses any target by more than 5%.
CalibrationResult calibrate(const BatteryParams& battery, const CalibrationTargets& targets = {});

}  // namespace rfb
