#include "rfb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rfb {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Fixed point

DimensionlessState fixed_point(const DimensionlessParams& d) {
  if (!(d.epsilon > 0.0)) throw InvalidParameter("fixed_point: epsilon must be > 0");
  // g(u) = 1 + eps * logit(e^u), increasing in u = ln x1.
  auto g = [&](double u) { return 1.0 + d.epsilon * (u - std::log1p(-std::exp(u))); };
  double lo = std::log(std::numeric_limits<double>::min());
  double hi = std::log(0.5);
  if (g(lo) > 0.0) throw DomainError("fixed_point: root below the smallest normal double");
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return {.tau = 0.0, .x1 = std::exp(0.5 * (lo + hi)), .x2 = 0.0, .x3 = 0.0};
}

// ---------------------------------------------------------------------------
// Cubic and spectrum

double Cubic::discriminant() const {
  const double a = c2, b = c1, c = c0;
  return 18.0 * a * b * c - 4.0 * a * a * a * c + a * a * b * b - 4.0 * b * b * b - 27.0 * c * c;
}

Cubic characteristic_polynomial(const Matrix3& a) {
  const double trace = a[0][0] + a[1][1] + a[2][2];
  const double minors = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) +
                        (a[0][0] * a[2][2] - a[0][2] * a[2][0]) +
                        (a[1][1] * a[2][2] - a[1][2] * a[2][1]);
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  return {.c2 = -trace, .c1 = minors, .c0 = -det};
}

namespace {

cplx polish(const Cubic& p, cplx z) {
  const cplx dp = (3.0 * z + 2.0 * p.c2) * z + p.c1;
  if (std::abs(dp) == 0.0) return z;
  const cplx next = z - p(z) / dp;
  return std::abs(p(next)) <= std::abs(p(z)) ? next : z;
}

bool spectrum_order(const cplx& a, const cplx& b) {
  const double ia = std::abs(a.imag()), ib = std::abs(b.imag());
  if (ia != ib) return ia > ib;
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() > b.imag();
}

}  // namespace

EigenSpectrum cubic_roots(const Cubic& poly) {
  const double a = poly.c2, b = poly.c1, c = poly.c0;
  const double shift = a / 3.0;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double disc = poly.discriminant();

  EigenSpectrum s;
  if (disc > 0.0 && p < 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const double y = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0);
      s.lambda[k] = polish(poly, cplx(y - shift, 0.0));
    }
  } else {
    // One real root by Cardano, then deflate to a quadratic for the pair.
    const double d = std::max(q * q / 4.0 + p * p * p / 27.0, 0.0);
    const double big = -std::copysign(std::cbrt(std::abs(q) / 2.0 + std::sqrt(d)), q);
    const double y = big != 0.0 ? big - p / (3.0 * big) : 0.0;
    cplx real_root = polish(poly, cplx(y - shift, 0.0));
    real_root = cplx(real_root.real(), 0.0);
    const double r = real_root.real();
    const double q1 = a + r;
    const double q0 = b + r * q1;
    const cplx root = std::sqrt(cplx(q1 * q1 / 4.0 - q0, 0.0));
    cplx upper = cplx(-q1 / 2.0, 0.0) + root;
    cplx lower = cplx(-q1 / 2.0, 0.0) - root;
    if (upper.imag() != 0.0 || lower.imag() != 0.0) {
      upper = polish(poly, upper.imag() >= 0.0 ? upper : lower);
      lower = std::conj(upper);
    } else {
      upper = polish(poly, upper);
      lower = polish(poly, lower);
    }
    s.lambda = {real_root, upper, lower};
  }
  std::sort(s.lambda.begin(), s.lambda.end(), spectrum_order);
  return s;
}

EigenSpectrum eigenvalues(const Matrix3& a) { return cubic_roots(characteristic_polynomial(a)); }

Cubic EigenSpectrum::reconstructed() const {
  const auto& l = lambda;
  return {
      .c2 = -(l[0] + l[1] + l[2]).real(),
      .c1 = (l[0] * l[1] + l[0] * l[2] + l[1] * l[2]).real(),
      .c0 = -(l[0] * l[1] * l[2]).real(),
  };
}

bool EigenSpectrum::all_real() const {
  return std::all_of(lambda.begin(), lambda.end(), [](const cplx& z) { return z.imag() == 0.0; });
}

EigenSpectrum fixed_point_spectrum(const DimensionlessParams& d) {
  return eigenvalues(jacobian(fixed_point(d).x1, d));
}

std::array<double, 3> phase_lags(const EigenSpectrum& s) {
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    out[k] = std::atan2(std::abs(s.lambda[k].imag()), s.lambda[k].real()) * 180.0 / std::numbers::pi;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bifurcation

BifurcationResult bifurcation_scan(const DimensionlessParams& d, double x1_lo, double x1_hi,
                                   int n_samples) {
  if (!(x1_lo > 0.0 && x1_lo < x1_hi && x1_hi < 0.5)) {
    throw InvalidParameter("bifurcation_scan: need 0 < x1_lo < x1_hi < 1/2");
  }
  if (n_samples < 16) throw InvalidParameter("bifurcation_scan: n_samples must be >= 16");

  auto disc_at = [&](double x1) { return characteristic_polynomial(jacobian(x1, d)).discriminant(); };
  const double u_lo = std::log(x1_lo), u_hi = std::log(x1_hi);

  BifurcationResult res;
  res.branch.reserve(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k) {
    const double x1 = std::exp(u_lo + (u_hi - u_lo) * k / (n_samples - 1));
    const auto a = jacobian(x1, d);
    res.branch.push_back({x1, characteristic_polynomial(a).discriminant(), eigenvalues(a)});
  }

  std::optional<std::size_t> bracket;
  for (std::size_t k = 0; k + 1 < res.branch.size(); ++k) {
    const double d0 = res.branch[k].discriminant, d1 = res.branch[k + 1].discriminant;
    if ((d0 < 0.0) != (d1 < 0.0) || d0 == 0.0) {
      bracket = k;
      break;
    }
  }
  if (!bracket) throw NoBifurcation("cubic discriminant keeps its sign over the scanned range");

  double lo = std::log(res.branch[*bracket].x1);
  double hi = std::log(res.branch[*bracket + 1].x1);
  const bool lo_negative = disc_at(std::exp(lo)) < 0.0;
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if ((disc_at(std::exp(mid)) < 0.0) == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.x1_c = std::exp(0.5 * (lo + hi));
  res.discriminant_at_x1_c = disc_at(res.x1_c);
  return res;
}

// ---------------------------------------------------------------------------
// Classification

std::string_view to_string(Case c) {
  switch (c) {
    case Case::Case1: return "Case1";
    case Case::Case2: return "Case2";
    case Case::Case3: return "Case3";
  }
  return "Unknown";
}

std::optional<Case> case_from_string(std::string_view s) {
  for (auto c : {Case::Case1, Case::Case2, Case::Case3}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::vector<std::string> ClassifierThresholds::violations() const {
  std::vector<std::string> out;
  if (n_osc < 1) out.push_back("classifier.n_osc must be >= 1");
  if (!(p_osc >= 0.0)) out.push_back("classifier.p_osc must be >= 0");
  if (!(eta > 0.0 && eta < 1.0)) out.push_back("classifier.eta must be in (0, 1)");
  return out;
}

double consumption_rate(double c_t0, double c_tf) {
  if (!(c_t0 > 0.0)) throw DomainError("consumption_rate: c_t0 must be > 0");
  if (!(c_tf > 0.0 && c_tf <= c_t0)) throw DomainError("consumption_rate: need 0 < c_tf <= c_t0");
  return (c_t0 - c_tf) / c_t0;
}

int count_oscillations(const Trajectory& traj, double t_f, double min_prominence) {
  std::vector<double> i;
  for (const auto& s : traj.samples) {
    if (s.t > t_f) break;
    i.push_back(s.i);
  }
  const std::size_t n = i.size();
  if (n < 3) return 0;

  // Skip the switch-on rise up to its first maximum.
  std::size_t start = 1;
  while (start + 1 < n && !(i[start] >= i[start - 1] && i[start] > i[start + 1])) ++start;
  ++start;

  int count = 0;
  for (std::size_t k = start + 1; k + 1 < n; ++k) {
    if (!(i[k] > i[k - 1] && i[k] >= i[k + 1])) continue;
    double left_min = i[k];
    for (std::size_t j = k; j-- > start;) {
      if (i[j] > i[k]) break;
      left_min = std::min(left_min, i[j]);
    }
    double right_min = i[k];
    for (std::size_t j = k + 1; j < n; ++j) {
      if (i[j] > i[k]) break;
      right_min = std::min(right_min, i[j]);
    }
    if (i[k] - std::max(left_min, right_min) > min_prominence) ++count;
  }
  return count;
}

CaseLabel classify(const Trajectory& traj, const ClassifierThresholds& th) {
  DischargeEnd end;
  try {
    end = detect_discharge_end(traj, traj.current_tol);
  } catch (const NoDischarge& e) {
    throw Unclassifiable(e.what());
  }
  CaseLabel out;
  out.t_f = end.t_f;
  out.complete = end.complete;
  out.epsilon_t = consumption_rate(traj.samples.front().c_t, end.c_tf);
  out.oscillation_count = count_oscillations(traj, end.t_f, th.p_osc * traj.i_hat);
  if (out.oscillation_count >= th.n_osc) {
    out.label = Case::Case3;
  } else if (out.epsilon_t >= th.eta) {
    out.label = Case::Case2;
  } else {
    out.label = Case::Case1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Field slices

namespace {

double lattice(const AxisRange& r, int k) {
  if (r.count == 1) return r.lo;
  return r.lo + (r.hi - r.lo) * k / (r.count - 1);
}

bool within(const AxisRange& r, double v) { return v >= std::min(r.lo, r.hi) && v <= std::max(r.lo, r.hi); }

FieldSample sample_at(const DimensionlessParams& d, const Vec3& x) {
  FieldSample s{.x = x, .dx = {}, .valid = x[0] > 0.0 && x[0] < 1.0};
  if (s.valid) s.dx = dimensionless_rhs({.tau = 0.0, .x1 = x[0], .x2 = x[1], .x3 = x[2]}, d);
  return s;
}

}  // namespace

FieldSlice vector_field_slice(const DimensionlessParams& d, const Plane& plane,
                              const AxisRange& first, const AxisRange& second) {
  if (first.count < 1 || second.count < 1) throw InvalidParameter("vector_field_slice: empty grid");
  if (plane.axis == Axis::X1 && !(plane.level > 0.0 && plane.level < 1.0)) {
    throw DomainError("vector_field_slice: x1 plane level outside (0, 1)");
  }

  FieldSlice out;
  out.plane = plane;
  const int fixed = static_cast<int>(plane.axis);
  out.in_plane = {static_cast<Axis>(fixed == 0 ? 1 : 0), static_cast<Axis>(fixed == 2 ? 1 : 2)};
  const auto a = static_cast<std::size_t>(out.in_plane[0]);
  const auto b = static_cast<std::size_t>(out.in_plane[1]);

  auto point = [&](double u, double v) {
    Vec3 x{};
    x[static_cast<std::size_t>(fixed)] = plane.level;
    x[a] = u;
    x[b] = v;
    return x;
  };

  out.grid.reserve(static_cast<std::size_t>(first.count) * static_cast<std::size_t>(second.count));
  for (int j = 0; j < first.count; ++j) {
    for (int k = 0; k < second.count; ++k) {
      out.grid.push_back(sample_at(d, point(lattice(first, j), lattice(second, k))));
    }
  }

  switch (plane.axis) {
    case Axis::X2:  // free (x1, x3)
      if (plane.level == 0.0) out.slow_nullcline = out.grid;
      for (int j = 0; j < first.count; ++j) {
        const double x1 = lattice(first, j);
        if (!(x1 > 0.0 && x1 < 1.0)) continue;
        const double x3 = nernst_dimensionless(x1, d.epsilon);
        if (within(second, x3)) out.fast_nullcline.push_back(sample_at(d, point(x1, x3)));
      }
      break;
    case Axis::X3: {  // free (x1, x2)
      for (int j = 0; j < first.count; ++j) {
        if (within(second, 0.0)) out.slow_nullcline.push_back(sample_at(d, point(lattice(first, j), 0.0)));
      }
      const double x1 = 1.0 / (1.0 + std::exp((1.0 - plane.level) / d.epsilon));
      if (within(first, x1) && x1 > 0.0) {
        for (int k = 0; k < second.count; ++k) {
          auto s = sample_at(d, point(x1, lattice(second, k)));
          // Place x3 exactly on N(x1) so the sample sits on the nullcline to
          // rounding of the inverse.
          s.x[2] = nernst_dimensionless(x1, d.epsilon);
          s.dx = dimensionless_rhs({.tau = 0.0, .x1 = s.x[0], .x2 = s.x[1], .x3 = s.x[2]}, d);
          out.fast_nullcline.push_back(s);
        }
      }
      break;
    }
    case Axis::X1: {  // free (x2, x3)
      for (int k = 0; k < second.count; ++k) {
        if (within(first, 0.0)) out.slow_nullcline.push_back(sample_at(d, point(0.0, lattice(second, k))));
      }
      const double x3 = nernst_dimensionless(plane.level, d.epsilon);
      if (within(second, x3)) {
        for (int j = 0; j < first.count; ++j) out.fast_nullcline.push_back(sample_at(d, point(lattice(first, j), x3)));
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

double relative(double value, double target) { return std::abs(value - target) / std::abs(target); }

double slow_root(const EigenSpectrum& s) {
  // The slow mode is the real root closest to zero.
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& z : s.lambda) {
    if (z.imag() == 0.0 && z.real() > best) best = z.real();
  }
  return best;
}

}  // namespace

CalibrationResult calibrate(const BatteryParams& battery, const CalibrationTargets& targets) {
  battery.validate();
  const double xs = targets.fixed_point_x1;
  const double w = targets.W.litres_per_second();
  if (!(xs > 0.0 && xs < 0.5)) throw InvalidParameter("calibrate: fixed point target must be in (0, 1/2)");
  if (!(w > 0.0)) throw InvalidParameter("calibrate: W must be > 0");
  if (!(targets.slow_eigenvalue < 0.0 && targets.fast_real_part < 0.0)) {
    throw InvalidParameter("calibrate: eigenvalue targets must be negative");
  }

  const auto& p = battery;
  CalibrationResult out;
  out.epsilon = 1.0 / (std::log1p(-xs) - std::log(xs));
  out.E_e0 = p.emf_slope() / out.epsilon;

  BatteryParams b = p;
  b.E_e0 = out.E_e0;
  const double flow_sum = w * (1.0 / p.alpha_c + 1.0 / p.alpha_t);

  // The slow root is -W t_hat / alpha_t up to O(1/f); refine t_hat against
  // the forward spectrum, with the trace fixing 1/delta given the slow root.
  double t_hat = -targets.slow_eigenvalue * p.alpha_t / w;
  double slow = targets.slow_eigenvalue;
  EigenSpectrum spectrum;
  DimensionlessParams d;
  for (int it = 0; it < 8; ++it) {
    out.L_ind = t_hat * t_hat * out.E_e0 / (p.alpha_c * p.F * p.c_max);
    const double inv_delta = -2.0 * targets.fast_real_part - slow - flow_sum * t_hat;
    if (!(inv_delta > 0.0)) throw CalibrationMismatch("calibrate: targets imply a non-positive 1/delta");
    out.r_total = out.L_ind * inv_delta / t_hat;

    const RfbSystem sys{b, CircuitParams{.r1 = 0.0, .r2 = out.r_total, .L_ind = out.L_ind}};
    d = nondimensionalize(sys, targets.W);
    spectrum = fixed_point_spectrum(d);
    slow = slow_root(spectrum);
    const double next = t_hat * targets.slow_eigenvalue / slow;
    const bool converged = std::abs(next - t_hat) <= 1e-15 * t_hat;
    t_hat = next;
    if (converged) break;
  }
  out.t_hat = d.t_hat;

  out.fixed_point_x1 = fixed_point(d).x1;
  out.slow_eigenvalue = slow;
  out.fast_real_part = spectrum.lambda[0].real();
  out.residual_fixed_point = relative(out.fixed_point_x1, xs);
  out.residual_slow = relative(out.slow_eigenvalue, targets.slow_eigenvalue);
  out.residual_fast = relative(out.fast_real_part, targets.fast_real_part);
  const double worst = std::max({out.residual_fixed_point, out.residual_slow, out.residual_fast});
  if (!(worst <= 0.05)) {
    throw CalibrationMismatch("calibrate: forward model misses a target by " + std::to_string(worst * 100.0) + "%");
  }
  return out;
}

}  // namespace rfb
