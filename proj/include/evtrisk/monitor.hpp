#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evtrisk/estimators.hpp"
#include "evtrisk/gev.hpp"
#include "evtrisk/maxima.hpp"
#include "evtrisk/parallel.hpp"

namespace evtrisk {

// ---------------------------------------------------------------- gof gate --

struct GateConfig {
  double ks_level = 0.05;
  double mpi_limit = 1e-4;
  int ks_reference_multiple = 10;  // reference sample = multiple * k draws
  bool one_sample_ks = false;      // compare against G directly instead
  std::uint64_t seed_base = 42;    // reference draws: derive_seed(base, symbol, t)
};

struct GateResult {
  double ks_pvalue = 0.0;
  double mpi = 1.0;
  bool pass = false;
};

// Model validity gate: a two-sample KS test between the observed maxima and
// a fixed-seed reference sample drawn from the fitted distribution, plus the
// positivity index mpi = G(0). Passes when ks_pvalue > ks_level and
// mpi < mpi_limit.
GateResult gof_gate(std::span<const double> sample, const GevParams& fit, std::uint64_t seed,
                    const GateConfig& cfg = {});

// ---------------------------------------------------------- rolling monitor --

struct RiskRecord {
  std::int64_t t = 0;
  GevParams params;
  double ks_pvalue = 0.0;
  double mpi = 1.0;
  double var99 = 0.0;  // gev_quantile(params, var_level)
  bool pass = false;
  bool missing = false;  // the estimator failed on this window
};

struct RiskTrajectory {
  std::string symbol;
  std::vector<RiskRecord> records;
  // stability fields, populated by monitor_symbol once >= 30 records pass
  double mEVI = 0.0;
  double margin = 0.0;
  double sti = 0.0;
  bool stable = false;
  bool has_stability = false;
};

// One GEV fit + gate per rolling sample. Estimator failures are kept as
// missing records so the trajectory stays aligned with its fit times.
// Windows are independent and run under the requested ExecMode.
RiskTrajectory fit_trajectory(const RollingSamples& samples, const std::string& symbol,
                              const MultiQuantileConfig& cfg = {}, const GateConfig& gate = {},
                              double var_level = 0.99, ExecMode mode = ExecMode::Serial);

// ---------------------------------------------------------------- stability --

struct StabilityResult {
  double mEVI = 0.0;
  double margin = 0.0;  // 1.96 * sqrt(Sigma(mEVI) / k)
  double sti = 0.0;     // fraction of passing records within the margin
  bool stable = false;  // sti > 0.8
};

// Computed over records that passed the gate; needs at least 30 of them
// (DataError otherwise). block_size_m is part of the interface for
// completeness; the margin is variance-only (the finite-block bias has no
// computable form here).
StabilityResult stability(const RiskTrajectory& traj, int block_size_m, int k,
                          const MultiQuantileConfig& cfg = {});

// fit_trajectory + stability in one call (stability skipped, not fatal, when
// fewer than 30 records pass).
RiskTrajectory monitor_symbol(const RollingSamples& samples, const std::string& symbol,
                              const MultiQuantileConfig& cfg = {}, const GateConfig& gate = {},
                              double var_level = 0.99, ExecMode mode = ExecMode::Serial);

// ------------------------------------------------------------ cross-section --

struct CrossSection {
  std::int64_t t = 0;
  double low = 0.0;  // 0.05 quantile across symbols
  double mid = 0.0;  // median
  double high = 0.0;  // 0.95 quantile
};

struct CrossSectionRow {
  CrossSection evi;
  CrossSection var;
};

// Quantiles of EVI(t) and VaR(t) across the pool at an exact fit time;
// nullopt when fewer than two symbols have a (non-missing) record at t.
std::optional<CrossSectionRow> cross_section(std::span<const RiskTrajectory> pool,
                                             std::int64_t t);

}  // namespace evtrisk
