#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evtrisk/monitor.hpp"
#include "evtrisk/returns.hpp"

namespace evtrisk {

// ------------------------------------------------------- changepoints --

// Online run-length detection with a constant hazard and a Gaussian
// observation model under a normal-inverse-gamma prior.  The recursion is
// exact (no run-length truncation); cost is quadratic in the analyzed
// length, which stays small for fit-level series.
struct BocdConfig {
  double hazard_lambda = 250.0;  // expected points between changes
  std::size_t thin = 1;          // analyze every thin-th point
  // The run-length posterior on stationary noise is occasionally multi-modal
  // and the argmax alone flaps; a collapse only counts when the short run
  // lengths actually hold this much posterior mass.  Genuine level shifts
  // concentrate well above 0.9; set to 0 for the unfiltered mode rule.
  double min_collapse_posterior = 0.8;
  // prior on the per-segment mean and variance
  double mu0 = 0.0;
  double kappa0 = 1.0;
  double alpha0 = 1.0;
  double beta0 = 1.0;

  void validate() const;
};

struct Changepoint {
  std::int64_t t = 0;  // index into the original series (segment start)
  double run_length_collapse_posterior = 0.0;
};

struct ChangepointReport {
  std::string series;
  std::vector<Changepoint> changepoints;
  double hazard_lambda = 0.0;
};

// A changepoint is emitted when the posterior mode of the run length drops
// by more than half between consecutive points; its t is the inferred start
// of the new segment and the posterior field is the mass on run lengths no
// longer than the new mode.  Needs at least 20 analyzed (post-thinning)
// points.  Deterministic.
ChangepointReport bocd(std::span<const double> series, const BocdConfig& cfg = {},
                       const std::string& series_id = "series");

// Runs bocd on the tail-index estimates of a fit trajectory.  Missing fits
// are dropped; the default thinning of 10 damps the autocorrelation that
// overlapping windows induce.  Changepoint t values are fit times.
ChangepointReport evi_changepoints(const RiskTrajectory& traj,
                                   BocdConfig cfg = {.thin = 10});

// --------------------------------------------------------------- jumps --

struct Jump {
  std::int64_t t = 0;
  double slr = 0.0;
  double threshold = 0.0;
};

struct JumpReport {
  std::string symbol;
  std::vector<Jump> jumps;
  std::size_t skipped_before_first_fit = 0;
};

// Flags every point whose |SLR| exceeds the prevailing VaR threshold: the
// var99 of the most recent successful fit at or before the point.  Points
// before the first fit have no threshold and are skipped (counted).
JumpReport detect_jumps(const SlrSeries& slr, const RiskTrajectory& traj);

}  // namespace evtrisk
