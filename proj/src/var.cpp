#include "evtrisk/var.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "evtrisk/errors.hpp"
#include "evtrisk/estimators.hpp"
#include "evtrisk/normal.hpp"
#include "evtrisk/stats.hpp"

namespace evtrisk {

namespace {

constexpr double kGpXiTol = 1e-8;

bool is_finite(double v) { return std::isfinite(v); }

} // namespace

double gev_var(const GevParams& fit, double q) {
    gev_validate(fit);
    return gev_quantile(fit, q);
}

double normal_var(std::span<const double> sample, double q) {
    if (sample.size() < 30)
        throw DataError("normal_var: need at least 30 points, got " +
                        std::to_string(sample.size()));
    const double zq = norm_quantile(q);
    const double mean = sample_mean(sample);
    const double var = sample_variance(sample);
    const double sd = std::sqrt(var);
    // A constant sample can leave rounding dust in the variance, so the
    // degeneracy check is relative to the sample's own scale.
    if (!(var > 0.0) || sd <= std::fabs(mean) * 1e-12)
        throw NumericError("normal_var: degenerate (constant) sample");
    return mean + zq * sd;
}

GpFit gp_fit(std::span<const double> x, double threshold_quantile,
             std::size_t min_exceedances) {
    if (!(threshold_quantile > 0.0 && threshold_quantile < 1.0))
        throw ParamError("gp_fit: threshold quantile must be in (0,1)");
    if (x.empty())
        throw DataError("gp_fit: empty sample");

    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double u = empirical_quantile_sorted(sorted, threshold_quantile);

    // Exceedances, ascending (strictly above the threshold).
    std::vector<double> y;
    for (auto it = std::upper_bound(sorted.begin(), sorted.end(), u);
         it != sorted.end(); ++it)
        y.push_back(*it - u);
    const std::size_t n = y.size();
    if (n < min_exceedances)
        throw DataError("gp_fit: only " + std::to_string(n) +
                        " exceedances above the threshold, need " +
                        std::to_string(min_exceedances));

    // Probability-weighted moments with the (i - 0.35)/n plotting position:
    //   b0 = mean excess,  b1 = (1/n) sum (1 - p_i) y_(i)
    // giving xi = 2 - b0/(b0 - 2 b1) and beta = 2 b0 b1 / (b0 - 2 b1).
    double b0 = 0.0, b1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i) + 0.65) / static_cast<double>(n);
        b0 += y[i];
        b1 += (1.0 - p) * y[i];
    }
    b0 /= static_cast<double>(n);
    b1 /= static_cast<double>(n);

    const double d = b0 - 2.0 * b1;
    if (!(d > 0.0))
        throw NumericError("gp_fit: probability-weighted moments degenerate");

    GpFit fit;
    fit.xi = 2.0 - b0 / d;
    fit.beta = 2.0 * b0 * b1 / d;
    if (!(fit.beta > 0.0) || !std::isfinite(fit.xi))
        throw NumericError("gp_fit: invalid scale from probability-weighted moments");
    fit.threshold = u;
    fit.zeta = static_cast<double>(n) / static_cast<double>(sorted.size());
    fit.exceedances = n;
    return fit;
}

double gp_var(std::span<const double> x, double q, double threshold_quantile,
              std::size_t min_exceedances) {
    if (!(q > 0.0 && q < 1.0))
        throw ParamError("gp_var: q must be in (0,1)");
    const GpFit f = gp_fit(x, threshold_quantile, min_exceedances);
    const double lr = std::log((1.0 - q) / f.zeta);
    if (std::fabs(f.xi) < kGpXiTol)
        return f.threshold - f.beta * lr;
    return f.threshold + f.beta / f.xi * std::expm1(-f.xi * lr);
}

VarRecord window_vars(const std::string& symbol, std::int64_t t, const GevParams& fit,
                      std::span<const double> maxima_window,
                      std::span<const double> slr_window, const VarConfig& cfg) {
    VarRecord rec;
    rec.symbol = symbol;
    rec.t = t;
    rec.gev_var = gev_var(fit, cfg.q);
    rec.normal_var = normal_var(
        cfg.normal_input == NormalVarInput::Maxima ? maxima_window : slr_window, cfg.q);
    if (!slr_window.empty()) {
        try {
            rec.gp_var = gp_var(slr_window, cfg.q, cfg.gp_threshold_quantile,
                                cfg.gp_min_exceedances);
        } catch (const DataError&) {
            // Window too small for a threshold fit; the field stays absent.
        }
    }
    return rec;
}

std::map<std::string, double> portfolio_weights(const std::map<std::string, double>& vars) {
    if (vars.empty())
        throw ParamError("portfolio_weights: no symbols");
    double lo = vars.begin()->second;
    for (const auto& [sym, v] : vars) {
        if (!is_finite(v))
            throw ParamError("portfolio_weights: non-finite VaR for " + sym);
        lo = std::min(lo, v);
    }
    // exp(-(v - lo)) keeps the largest term at exactly 1, so the sum can
    // never underflow no matter how large the VaR levels are.
    std::map<std::string, double> w;
    double total = 0.0;
    for (const auto& [sym, v] : vars)
        total += (w[sym] = std::exp(-(v - lo)));
    for (auto& [sym, wi] : w) wi /= total;
    return w;
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Equal:  return "equal";
        case Strategy::Normal: return "normal";
        case Strategy::Gev:    return "gev";
    }
    return "?";
}

namespace {

// Most recent finite VaR at or before day index e, if any.
std::optional<double> latest_var(const std::vector<double>& col, std::size_t e) {
    for (std::size_t i = e + 1; i-- > 0;)
        if (std::isfinite(col[i])) return col[i];
    return std::nullopt;
}

} // namespace

BacktestResult backtest(const BacktestInput& input, const RebalancePlan& plan) {
    const std::size_t n_days = input.dates.size();
    const std::size_t n_sym = input.symbols.size();
    if (n_days == 0) throw ParamError("backtest: empty date axis");
    if (n_sym == 0) throw ParamError("backtest: no symbols");
    for (std::size_t i = 1; i < n_days; ++i)
        if (input.dates[i] <= input.dates[i - 1])
            throw ParamError("backtest: dates must be strictly increasing");
    for (const SymbolPanel& p : input.symbols)
        if (p.close.size() != n_days || p.var_gev.size() != n_days ||
            p.var_normal.size() != n_days)
            throw ParamError("backtest: panel for " + p.symbol +
                             " is not aligned to the date axis");
    if (plan.period_days < 1)
        throw ParamError("backtest: rebalance period must be at least one day");
    if (plan.fixed_position_fraction &&
        !(*plan.fixed_position_fraction >= 0.0 && *plan.fixed_position_fraction <= 1.0))
        throw ParamError("backtest: fixed position fraction must lie in [0,1]");
    if (plan.transaction_cost < 0.0)
        throw ParamError("backtest: negative transaction cost");

    BacktestResult out;
    out.strategy = plan.strategy;

    // Target weights from the VaR levels known at day index e.  Symbols with
    // no estimate yet are left out, which hands their share to the rest; a
    // period with nothing to go on falls back to equal weights.
    auto target_weights = [&](std::size_t e) {
        std::map<std::string, double> w;
        if (plan.strategy == Strategy::Equal) {
            for (const SymbolPanel& p : input.symbols)
                w[p.symbol] = 1.0 / static_cast<double>(n_sym);
            return w;
        }
        std::map<std::string, double> vars;
        for (const SymbolPanel& p : input.symbols) {
            const auto& col =
                plan.strategy == Strategy::Gev ? p.var_gev : p.var_normal;
            if (auto v = latest_var(col, e)) vars[p.symbol] = *v;
        }
        if (vars.size() < n_sym) ++out.var_fallback_periods;
        if (vars.empty()) {
            for (const SymbolPanel& p : input.symbols)
                w[p.symbol] = 1.0 / static_cast<double>(n_sym);
            return w;
        }
        return portfolio_weights(vars);
    };

    auto fraction = [&](std::size_t period_index) {
        if (plan.fixed_position_fraction) return *plan.fixed_position_fraction;
        return plan.position_reduction ? 1.0 / static_cast<double>(period_index) : 1.0;
    };

    std::size_t period = 1;
    std::map<std::string, double> weights = target_weights(0);
    double pf = fraction(period);
    double value = 1.0;

    out.states.reserve(n_days);
    out.states.push_back({input.dates[0], weights, pf, value});

    const std::size_t step = static_cast<std::size_t>(plan.period_days);
    for (std::size_t d = 1; d < n_days; ++d) {
        if (d % step == 0) {
            ++period;
            std::map<std::string, double> next = target_weights(d - 1);
            if (plan.transaction_cost > 0.0) {
                double turnover = 0.0;
                for (const auto& [sym, wn] : next) {
                    auto it = weights.find(sym);
                    turnover += std::fabs(wn - (it == weights.end() ? 0.0 : it->second));
                }
                for (const auto& [sym, wo] : weights)
                    if (!next.count(sym)) turnover += wo;
                value *= 1.0 - plan.transaction_cost * 0.5 * turnover;
            }
            weights = std::move(next);
            pf = fraction(period);
        }

        // Weighted simple return; a constituent without both closes has its
        // weight spread pro-rata over those that do.
        double num = 0.0, den = 0.0;
        bool missing = false;
        for (const SymbolPanel& p : input.symbols) {
            const auto it = weights.find(p.symbol);
            if (it == weights.end() || it->second == 0.0) continue;
            const double c0 = p.close[d - 1];
            const double c1 = p.close[d];
            if (std::isfinite(c0) && std::isfinite(c1) && c0 > 0.0) {
                num += it->second * (c1 / c0 - 1.0);
                den += it->second;
            } else {
                missing = true;
            }
        }
        if (missing) ++out.redistributed_steps;
        const double rp = den > 0.0 ? num / den : 0.0;
        value *= 1.0 + pf * rp;
        out.states.push_back({input.dates[d], weights, pf, value});
    }
    return out;
}

} // namespace evtrisk
