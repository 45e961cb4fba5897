#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evtrisk/gev.hpp"

namespace evtrisk {

// ---------------------------------------------------------------------------
// Value-at-risk measures on a common rolling window.
//
// Three measures are produced side by side so strategies can be compared on
// one input: the GEV quantile of the fitted maxima law, a normal fit, and a
// peaks-over-threshold generalized Pareto fit on the raw |SLR| window.
// ---------------------------------------------------------------------------

// Which sample the normal fit sees.  The maxima window keeps the three
// measures on the same observations as the GEV fit; the raw-|SLR| mode is
// provided because either reading is defensible.
enum class NormalVarInput { Maxima, Slr };

struct VarConfig {
    double q = 0.99;
    double gp_threshold_quantile = 0.9;
    std::size_t gp_min_exceedances = 50;
    NormalVarInput normal_input = NormalVarInput::Maxima;
};

struct VarRecord {
    std::string symbol;
    std::int64_t t = 0;
    double gev_var = 0.0;
    double normal_var = 0.0;
    std::optional<double> gp_var;  // absent when the window has too few exceedances
};

// The q-quantile of the fitted maxima law; identical to gev_quantile by
// definition, kept as a named measure for the record/report layer.
double gev_var(const GevParams& fit, double q = 0.99);

// mean + z_q * sd of the window sample (unbiased sd).  Requires >= 30
// points (DataError) and nonzero variance (NumericError).
double normal_var(std::span<const double> sample, double q = 0.99);

// Generalized Pareto tail fit by probability-weighted moments.
struct GpFit {
    double xi = 0.0;
    double beta = 1.0;
    double threshold = 0.0;     // empirical threshold-quantile of the input
    double zeta = 0.0;          // exceedance fraction
    std::size_t exceedances = 0;
};

GpFit gp_fit(std::span<const double> x, double threshold_quantile = 0.9,
             std::size_t min_exceedances = 50);

// VaR_q = u + (beta/xi_g) * (((1-q)/zeta)^(-xi_g) - 1), with the xi_g = 0
// branch u + beta*log(zeta/(1-q)).  Input is the raw magnitude window.
double gp_var(std::span<const double> x, double q = 0.99,
              double threshold_quantile = 0.9, std::size_t min_exceedances = 50);

// All measures on one window.  gp_var is omitted (not an error) when the
// |SLR| window cannot support the threshold fit.
VarRecord window_vars(const std::string& symbol, std::int64_t t, const GevParams& fit,
                      std::span<const double> maxima_window,
                      std::span<const double> slr_window, const VarConfig& cfg = {});

// ---------------------------------------------------------------------------
// Portfolio construction and backtest.
// ---------------------------------------------------------------------------

// Softmin allocation  w_i = exp(-VaR_i) / sum_j exp(-VaR_j), evaluated with
// a min-shift so large VaR values cannot underflow the whole map.
std::map<std::string, double> portfolio_weights(const std::map<std::string, double>& vars);

enum class Strategy { Equal, Normal, Gev };

const char* strategy_name(Strategy s);

struct RebalancePlan {
    int period_days = 22;
    Strategy strategy = Strategy::Gev;
    // Scale exposure by 1/m in the m-th period (remainder earns zero).
    bool position_reduction = false;
    // When set, every period uses this exposure instead (0 = all cash).
    std::optional<double> fixed_position_fraction;
    double transaction_cost = 0.0;  // per unit turnover; hook, default off
};

// One symbol's daily panel, aligned to the shared date axis.  NaN marks a
// missing close or a date with no VaR estimate yet.
struct SymbolPanel {
    std::string symbol;
    std::vector<double> close;
    std::vector<double> var_gev;
    std::vector<double> var_normal;
};

struct BacktestInput {
    std::vector<std::int64_t> dates;  // strictly increasing trading days
    std::vector<SymbolPanel> symbols;
};

struct PortfolioState {
    std::int64_t t = 0;
    std::map<std::string, double> weights;  // the period's target weights
    double position_fraction = 1.0;
    double value = 1.0;
};

struct BacktestResult {
    Strategy strategy = Strategy::Gev;
    std::vector<PortfolioState> states;      // one per trading day
    std::size_t redistributed_steps = 0;     // days with a missing constituent
    std::size_t var_fallback_periods = 0;    // periods where some symbol had no VaR
};

// Fixed target weights inside each period; weights recomputed from the most
// recent VaR at each period end and applied from the next day on.  Value
// evolves by the exposure-scaled weighted sum of simple returns; a missing
// constituent's weight is redistributed pro-rata for the affected steps.
BacktestResult backtest(const BacktestInput& input, const RebalancePlan& plan);

} // namespace evtrisk
