#include "evtrisk/monitor.hpp"

#include <algorithm>
#include <cmath>

#include "evtrisk/errors.hpp"
#include "evtrisk/rng.hpp"
#include "evtrisk/stats.hpp"

namespace evtrisk {

GateResult gof_gate(std::span<const double> sample, const GevParams& fit, std::uint64_t seed,
                    const GateConfig& cfg) {
  gev_validate(fit);
  if (sample.empty()) throw DataError("gof_gate: empty sample");

  GateResult r;
  if (cfg.one_sample_ks) {
    r.ks_pvalue = ks_test_one_sample_gev(sample, fit).pvalue;
  } else {
    const std::size_t n_ref = sample.size() * static_cast<std::size_t>(cfg.ks_reference_multiple);
    const std::vector<double> ref = gev_sample(fit, n_ref, seed);
    r.ks_pvalue = ks_test_two_sample(sample, ref).pvalue;
  }
  r.mpi = gev_cdf(fit, 0.0);
  r.pass = r.ks_pvalue > cfg.ks_level && r.mpi < cfg.mpi_limit;
  return r;
}

RiskTrajectory fit_trajectory(const RollingSamples& samples, const std::string& symbol,
                              const MultiQuantileConfig& cfg, const GateConfig& gate,
                              double var_level, ExecMode mode) {
  if (samples.count() == 0) throw DataError(symbol + ": no rolling samples to fit");
  if (!(var_level > 0.0 && var_level < 1.0)) throw ParamError("var_level must be in (0,1)");

  RiskTrajectory traj;
  traj.symbol = symbol;
  traj.records.resize(samples.count());
  const std::uint64_t sym_hash = hash_string(symbol);

  parallel_for(mode, samples.count(), [&](std::size_t i) {
    RiskRecord& rec = traj.records[i];
    rec.t = samples.fit_times[i];
    try {
      const FitResult fit = multi_quantile_fit(samples.sample(i), cfg);
      rec.params = fit.params;
      const GateResult g = gof_gate(samples.sample(i), fit.params,
                                    derive_seed(gate.seed_base, sym_hash,
                                                static_cast<std::uint64_t>(rec.t)),
                                    gate);
      rec.ks_pvalue = g.ks_pvalue;
      rec.mpi = g.mpi;
      rec.var99 = gev_quantile(fit.params, var_level);
      rec.pass = g.pass;
    } catch (const Error&) {
      rec.missing = true;  // keep the slot: the trajectory stays time-aligned
    }
  });
  return traj;
}

StabilityResult stability(const RiskTrajectory& traj, int block_size_m, int k,
                          const MultiQuantileConfig& cfg) {
  (void)block_size_m;  // margins are variance-only; no finite-block bias term
  if (k < 1) throw ParamError("stability: k must be positive");

  std::vector<double> evi;
  for (const RiskRecord& r : traj.records)
    if (!r.missing && r.pass) evi.push_back(r.params.xi);
  if (evi.size() < 30)
    throw DataError(traj.symbol + ": stability needs >= 30 passing records");

  StabilityResult s;
  for (double x : evi) s.mEVI += x;
  s.mEVI /= static_cast<double>(evi.size());
  s.margin = 1.96 * std::sqrt(xi_asymptotic_variance(s.mEVI, cfg) / static_cast<double>(k));
  std::size_t inside = 0;
  for (double x : evi)
    if (std::fabs(x - s.mEVI) <= s.margin) ++inside;
  s.sti = static_cast<double>(inside) / static_cast<double>(evi.size());
  s.stable = s.sti > 0.8;
  return s;
}

RiskTrajectory monitor_symbol(const RollingSamples& samples, const std::string& symbol,
                              const MultiQuantileConfig& cfg, const GateConfig& gate,
                              double var_level, ExecMode mode) {
  RiskTrajectory traj = fit_trajectory(samples, symbol, cfg, gate, var_level, mode);
  std::size_t passing = 0;
  for (const RiskRecord& r : traj.records)
    if (!r.missing && r.pass) ++passing;
  if (passing >= 30) {
    const StabilityResult s = stability(traj, 0, samples.k, cfg);
    traj.mEVI = s.mEVI;
    traj.margin = s.margin;
    traj.sti = s.sti;
    traj.stable = s.stable;
    traj.has_stability = true;
  }
  return traj;
}

namespace {

CrossSection quantiles_at(std::vector<double>& vals, std::int64_t t) {
  std::sort(vals.begin(), vals.end());
  return {t, empirical_quantile(vals, 0.05), empirical_quantile(vals, 0.5),
          empirical_quantile(vals, 0.95)};
}

}  // namespace

std::optional<CrossSectionRow> cross_section(std::span<const RiskTrajectory> pool,
                                             std::int64_t t) {
  std::vector<double> evi, var;
  for (const RiskTrajectory& traj : pool)
    for (const RiskRecord& r : traj.records)
      if (r.t == t && !r.missing) {
        evi.push_back(r.params.xi);
        var.push_back(r.var99);
        break;
      }
  if (evi.size() < 2) return std::nullopt;
  return CrossSectionRow{quantiles_at(evi, t), quantiles_at(var, t)};
}

}  // namespace evtrisk
