// (W, c_c0) grid sweeps: one independent simulation per cell, classified and
// reduced to a consumption-rate map, plus the eta level set of that map.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfb/analysis.hpp"
#include "rfb/integrator.hpp"
#include "rfb/model.hpp"

namespace rfb {

class EmptyBoundary : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;
  bool log_spaced = false;

  /// Ascending node values; endpoints are exact.
  std::vector<double> values() const;
};

struct SweepSpec {
  GridAxis W{0.001, 0.200, 40, true};  //!< [L/min]
  GridAxis c_c0{0.01, 1.00, 20, false};  //!< [mol/L]
  RfbSystem system;
  InitialCurrentMode initial_current = OpenSwitch{};
  IntegratorConfig integrator;  //!< t_end is replaced per cell, see cell_time_limit
  double t_end_cap = 2.0e5;     //!< hard ceiling on the per-cell horizon [s]
  ClassifierThresholds thresholds;
  int workers = 0;  //!< 0: hardware concurrency

  std::vector<std::string> violations() const;
  void validate() const;

  /// 200 x 100 grid over the same ranges.
  static SweepSpec full_resolution();
};

struct SweepCell {
  double W = 0.0;     //!< [L/min]
  double c_c0 = 0.0;  //!< [mol/L]
  double epsilon_t = 0.0;  //!< NaN when the cell could not be classified
  std::optional<Case> label;
  int oscillation_count = 0;
  double t_f = 0.0;  //!< [s]
  EndKind end = EndKind::TimeLimit;
  bool complete = true;
  double balance_error = 0.0;  //!< charge_balance_error of the cell's run
  std::string error;  //!< set when label is empty

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct SweepResult {
  std::vector<double> W;     //!< column coordinates [L/min]
  std::vector<double> c_c0;  //!< row coordinates [mol/L]
  std::vector<SweepCell> cells;  //!< row-major, W fastest
  double eta = 0.95;

  const SweepCell& at(std::size_t iw, std::size_t ic) const { return cells[ic * W.size() + iw]; }
};

/// Horizon for one cell: the time to pass the tank's charge at half the
/// current scale plus ten tank turnover times, capped at spec.t_end_cap.
double cell_time_limit(const RfbSystem& sys, const OperatingCondition& op, double cap);

/// Integrates and classifies one condition; classification failures are
/// recorded in the cell.
SweepCell run_cell(const RfbSystem& sys, const OperatingCondition& op, const IntegratorConfig& cfg,
                   const ClassifierThresholds& th);

/// Runs every grid cell on a pool of spec.workers threads. The result does not
/// depend on the worker count.
SweepResult run_sweep(const SweepSpec& spec);

struct BoundaryPoint {
  double c_c0 = 0.0;    //!< [mol/L]
  double W_star = 0.0;  //!< [L/min]
};

/// For each c_c0 row, the W where epsilon_t crosses eta, by linear
/// interpolation between the last pair of W-adjacent cells that straddle it.
/// Rows without a straddle are skipped. Throws EmptyBoundary if none straddle.
std::vector<BoundaryPoint> extract_boundary(const SweepResult& result, double eta);

/// n points spaced evenly by arc length along the polyline, in coordinates
/// normalised by each axis' extent. Endpoints included.
std::vector<BoundaryPoint> resample_boundary(const std::vector<BoundaryPoint>& polyline, int n);

/// Worker count from RFB_DYN_WORKERS if set and positive, else `fallback`,
/// else hardware concurrency.
int resolve_workers(int fallback);

}  // namespace rfb
