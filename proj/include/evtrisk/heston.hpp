#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evtrisk/estimators.hpp"
#include "evtrisk/maxima.hpp"
#include "evtrisk/monitor.hpp"
#include "evtrisk/parallel.hpp"

namespace evtrisk {

// ---------------------------------------------------------------------------
// Canonical square-root stochastic-volatility model
//   dV_s = (z - V_s) ds + sqrt(V_s) dH_s,   dlogP_s = sqrt(V_s) dB_s
// with corr(dB, dH) = rho, stepped by the implicit Milstein scheme
//   V_{n+1} = (V_n + z e + sqrt(V_n) dW + (dW^2 - e)/4) / (1 + e).
// One positive parameter z controls the whole variance law; z > 1/2 keeps
// the variance strictly positive in continuous time.
// ---------------------------------------------------------------------------

struct HestonConfig {
    double z = 3.0;
    double epsilon = 1.0 / 14400;   // integration step
    double horizon_T = 896.0;
    double delta = 1.0 / 24;        // observation spacing
    double rho = 0.0;
    std::optional<double> v0;       // starting variance; defaults to z
    double burn_in = 0.0;           // duration discarded before recording
    std::uint64_t seed = 42;
    bool zero_noise = false;        // test hook: drift-only variance recursion
};

// ParamError unless z > 1/2, the grids nest (delta a multiple of epsilon,
// horizon a multiple of delta) and the remaining fields are sane.
void heston_validate(const HestonConfig& cfg);

// Observations per maxima block of the given duration (block/delta).
std::size_t observations_per_block(const HestonConfig& cfg, double block_duration);

// Full integration grid; sized (T/epsilon + 1), so only suitable for test
// horizons.  Production paths go through simulate_observed instead.
struct SimPath {
    std::vector<double> v_grid;
    std::vector<double> logp_grid;
    std::vector<double> integrated_variance;  // per delta-interval
    std::size_t clamped_steps = 0;
    std::size_t total_steps = 0;
};

SimPath simulate_path(const HestonConfig& cfg);

// The same trajectory retained only at the delta-marks: log-price and spot
// variance at each mark plus the exact grid sum of V over each interval.
struct ObservedPath {
    double delta = 0.0;
    std::vector<double> logp;                 // size n_obs + 1
    std::vector<double> v_marks;              // size n_obs + 1
    std::vector<double> integrated_variance;  // size n_obs
    std::size_t clamped_steps = 0;
    std::size_t total_steps = 0;
};

ObservedPath simulate_observed(const HestonConfig& cfg);

// Log-returns scaled to unit variance by the realized variance of their own
// interval (Integrated) or by the interval-start spot variance (Spot, the
// small-delta shortcut).  Intervals with zero realized variance are skipped.
enum class VarianceMode { Integrated, Spot };

std::vector<double> standardized_returns(const ObservedPath& path,
                                         VarianceMode mode = VarianceMode::Integrated);
std::vector<double> standardized_returns(const SimPath& path, const HestonConfig& cfg,
                                         VarianceMode mode = VarianceMode::Integrated);

// ---------------------------------------------------------------------------
// Simulation study: per (z, delta, replicate), run the full maxima -> rolling
// GEV -> gate pipeline on |SLR| and summarize each trajectory.
// ---------------------------------------------------------------------------

struct HestonExperimentConfig {
    std::vector<double> zs{0.55, 3.0};
    std::vector<double> deltas{1.0 / 240, 1.0 / 48, 1.0 / 24};
    int reps = 20;
    double epsilon = 1.0 / 14400;
    double horizon_T = 896.0;
    double block_duration = 2.0;
    double rho = 0.0;
    std::uint64_t seed = 42;
    RollingWindow window;               // 123-maxima windows, one-block stride
    MultiQuantileConfig fit;
    GateConfig gate;
    double var_level = 0.99;
    // Matched-tail dispersion data: per replicate, this many non-overlapping
    // windows contribute one (maxima-law VaR, threshold VaR) pair each.
    std::size_t var_pair_windows = 3;
    ExecMode mode = ExecMode::OpenMP;
};

struct HestonRow {
    double z = 0.0;
    double delta = 0.0;
    int rep = 0;
    // Per-trajectory summaries over fits that pass the gate.
    double mEVI = 0.0;
    double mu_bar = 0.0;
    double sigma_bar = 0.0;
    double var99 = 0.0;
    double sti = 0.0;
    double ks_pass_rate = 0.0;  // fraction of fits with KS p above the gate level
    double mpi_max = 0.0;       // worst model-positivity index across fits
    // Extra per-trajectory diagnostics (not part of the table serialization).
    double slr_ks_pvalue = 0.0;      // one-sample normality of the full SLR series
    std::size_t fits = 0;            // non-missing fits
    std::size_t missing_fits = 0;
    std::size_t clamped_steps = 0;
    bool stable = false;
    std::vector<std::pair<double, double>> var_pairs;  // (gev_var, gp_var) matched tail
};

// One-sample normality of the SLR pooled across a cell's replicates, with
// the per-replicate p-value range for context.  One entry per (z, delta)
// with at least one surviving replicate, z-major order.
struct CellNormality {
    double z = 0.0;
    double delta = 0.0;
    double pooled_pvalue = 0.0;
    double min_rep_pvalue = 1.0;
    double max_rep_pvalue = 0.0;
    std::size_t pooled_n = 0;
    std::size_t reps = 0;  // replicates contributing
};

struct HestonExperiment {
    std::vector<HestonRow> rows;        // successful (z, delta, rep) cells
    std::vector<CellNormality> normality;
    std::vector<std::string> failures;  // excluded cells, with reasons
    std::vector<std::string> warnings;  // e.g. blocks holding < 20 observations
};

HestonExperiment heston_experiment(const HestonExperimentConfig& cfg = {});

// The canonical table serialization of the experiment rows.
std::string experiment_csv(const HestonExperiment& ex);

} // namespace evtrisk
