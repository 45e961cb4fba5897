#include "evtrisk/heston.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "evtrisk/errors.hpp"
#include "evtrisk/normal.hpp"
#include "evtrisk/rng.hpp"
#include "evtrisk/stats.hpp"
#include "evtrisk/var.hpp"

namespace evtrisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// num/den as an exact positive integer (within rounding slack), or 0.
std::size_t exact_ratio(double num, double den) {
    const double r = num / den;
    const double rounded = std::nearbyint(r);
    if (rounded < 1.0 || std::fabs(r - rounded) > 1e-6 * std::max(1.0, r))
        return 0;
    return static_cast<std::size_t>(rounded);
}

// One scheme step.  The numerator equals (sqrt(V) + dW/2)^2 + e(z - 1/4),
// so the update is algebraically positive whenever z > 1/4; the clamp is
// kept as a defensive counter for configurations outside that regime.
inline double milstein_step(double v, double z, double eps, double dw,
                            std::size_t* clamped) {
    double vn = (v + z * eps + std::sqrt(v) * dw + (dw * dw - eps) * 0.25) / (1.0 + eps);
    if (vn < 0.0) {
        vn = 0.0;
        ++*clamped;
    }
    return vn;
}

// Core integration loop.  on_start(v) fires once after burn-in, at the moment
// recording begins; on_step(recorded_index, v_during, v_after, logp) fires once
// per recorded step, after the state advances.
template <class OnStart, class OnStep>
std::size_t run_scheme(const HestonConfig& cfg, std::size_t n_steps, OnStart&& on_start,
                       OnStep&& on_step) {
    const double eps = cfg.epsilon;
    const double seps = std::sqrt(eps);
    const double orth = std::sqrt(1.0 - cfg.rho * cfg.rho);
    const std::size_t burn = static_cast<std::size_t>(std::nearbyint(cfg.burn_in / eps));

    Rng rng(cfg.seed);
    double v = cfg.v0.value_or(cfg.z);
    double logp = 0.0;
    std::size_t clamped = 0;

    for (std::size_t i = 0; i < burn; ++i) {
        if (cfg.zero_noise) {
            v = (v + cfg.z * eps) / (1.0 + eps);
        } else {
            const auto [g1, g2] = rng.normal_pair();
            (void)g2;
            v = milstein_step(v, cfg.z, eps, seps * g1, &clamped);
        }
    }
    on_start(v);

    for (std::size_t i = 0; i < n_steps; ++i) {
        const double v_pre = v;
        if (cfg.zero_noise) {
            v = (v + cfg.z * eps) / (1.0 + eps);
        } else {
            const auto [g1, g2] = rng.normal_pair();
            const double dw = seps * g1;
            const double db = cfg.rho * dw + orth * seps * g2;
            logp += std::sqrt(v_pre) * db;
            v = milstein_step(v_pre, cfg.z, eps, dw, &clamped);
        }
        on_step(i, v_pre, v, logp);
    }

    const std::size_t total = burn + n_steps;
    if (total > 0 && static_cast<double>(clamped) > 1e-3 * static_cast<double>(total))
        throw NumericError("heston: variance clamped on " + std::to_string(clamped) +
                           " of " + std::to_string(total) + " steps; scheme failure");
    return clamped;
}

std::string cell_label(double z, double delta, int rep) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "z%g_d%g_r%d", z, delta, rep);
    return buf;
}

} // namespace

void heston_validate(const HestonConfig& cfg) {
    if (!(cfg.z > 0.5))
        throw ParamError("heston: z must exceed 1/2 (positive-variance condition)");
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon))
        throw ParamError("heston: step must be positive");
    if (!(cfg.delta >= cfg.epsilon))
        throw ParamError("heston: observation spacing below the integration step");
    if (exact_ratio(cfg.delta, cfg.epsilon) == 0)
        throw ParamError("heston: observation spacing must be a multiple of the step");
    if (!(cfg.horizon_T > 0.0) || exact_ratio(cfg.horizon_T, cfg.delta) == 0)
        throw ParamError("heston: horizon must be a positive multiple of the spacing");
    if (!(cfg.rho >= -1.0 && cfg.rho <= 1.0))
        throw ParamError("heston: correlation outside [-1, 1]");
    if (cfg.v0 && !(*cfg.v0 > 0.0))
        throw ParamError("heston: starting variance must be positive");
    if (!(cfg.burn_in >= 0.0))
        throw ParamError("heston: negative burn-in");
}

std::size_t observations_per_block(const HestonConfig& cfg, double block_duration) {
    const std::size_t m = exact_ratio(block_duration, cfg.delta);
    if (m == 0)
        throw ParamError("heston: block duration must be a multiple of the spacing");
    return m;
}

SimPath simulate_path(const HestonConfig& cfg) {
    heston_validate(cfg);
    const std::size_t stride = exact_ratio(cfg.delta, cfg.epsilon);
    const std::size_t n_obs = exact_ratio(cfg.horizon_T, cfg.delta);
    const std::size_t n_steps = stride * n_obs;

    SimPath path;
    path.v_grid.reserve(n_steps + 1);
    path.logp_grid.reserve(n_steps + 1);
    path.integrated_variance.assign(n_obs, 0.0);
    path.total_steps = n_steps;

    path.clamped_steps = run_scheme(
        cfg, n_steps,
        [&](double v0) {
            path.v_grid.push_back(v0);
            path.logp_grid.push_back(0.0);
        },
        [&](std::size_t i, double v_pre, double v_post, double logp) {
            path.integrated_variance[i / stride] += v_pre * cfg.epsilon;
            path.v_grid.push_back(v_post);
            path.logp_grid.push_back(logp);
        });
    return path;
}

ObservedPath simulate_observed(const HestonConfig& cfg) {
    heston_validate(cfg);
    const std::size_t stride = exact_ratio(cfg.delta, cfg.epsilon);
    const std::size_t n_obs = exact_ratio(cfg.horizon_T, cfg.delta);
    const std::size_t n_steps = stride * n_obs;

    ObservedPath path;
    path.delta = cfg.delta;
    path.logp.reserve(n_obs + 1);
    path.v_marks.reserve(n_obs + 1);
    path.integrated_variance.assign(n_obs, 0.0);
    path.total_steps = n_steps;

    path.clamped_steps = run_scheme(
        cfg, n_steps,
        [&](double v0) {
            path.logp.push_back(0.0);
            path.v_marks.push_back(v0);
        },
        [&](std::size_t i, double v_pre, double v_post, double logp) {
            path.integrated_variance[i / stride] += v_pre * cfg.epsilon;
            if ((i + 1) % stride == 0) {
                path.logp.push_back(logp);
                path.v_marks.push_back(v_post);
            }
        });
    return path;
}

std::vector<double> standardized_returns(const ObservedPath& path, VarianceMode mode) {
    const std::size_t n = path.integrated_variance.size();
    if (path.logp.size() != n + 1 || path.v_marks.size() != n + 1)
        throw ParamError("standardized_returns: inconsistent observed path");
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double iv = mode == VarianceMode::Integrated
                              ? path.integrated_variance[j]
                              : path.v_marks[j] * path.delta;
        if (!(iv > 0.0)) continue;  // a dead interval carries no information
        out.push_back((path.logp[j + 1] - path.logp[j]) / std::sqrt(iv));
    }
    return out;
}

std::vector<double> standardized_returns(const SimPath& path, const HestonConfig& cfg,
                                         VarianceMode mode) {
    heston_validate(cfg);
    const std::size_t stride = exact_ratio(cfg.delta, cfg.epsilon);
    const std::size_t n = path.integrated_variance.size();
    if (path.logp_grid.size() != stride * n + 1)
        throw ParamError("standardized_returns: path and config disagree");
    ObservedPath obs;
    obs.delta = cfg.delta;
    obs.integrated_variance = path.integrated_variance;
    obs.logp.reserve(n + 1);
    obs.v_marks.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        obs.logp.push_back(path.logp_grid[k * stride]);
        obs.v_marks.push_back(path.v_grid[k * stride]);
    }
    return standardized_returns(obs, mode);
}

HestonExperiment heston_experiment(const HestonExperimentConfig& cfg) {
    if (cfg.reps < 1) throw ParamError("experiment: need at least one replicate");
    if (cfg.zs.empty() || cfg.deltas.empty())
        throw ParamError("experiment: empty parameter grid");
    if (!(cfg.var_level > 0.0 && cfg.var_level < 1.0))
        throw ParamError("experiment: VaR level outside (0,1)");
    if (!(cfg.block_duration > 0.0))
        throw ParamError("experiment: block duration must be positive");
    cfg.fit.validate();

    HestonExperiment ex;
    const std::size_t n_blocks = exact_ratio(cfg.horizon_T, cfg.block_duration);
    if (n_blocks == 0)
        throw ParamError("experiment: horizon must be a positive multiple of the block duration");

    std::vector<std::size_t> ms(cfg.deltas.size());
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
        const std::size_t m = exact_ratio(cfg.block_duration, cfg.deltas[di]);
        if (m == 0)
            throw ParamError("experiment: block duration must be a multiple of every spacing");
        ms[di] = m;
        if (m < 20) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "delta=%g gives only %zu observations per block; maxima are weak",
                          cfg.deltas[di], m);
            ex.warnings.emplace_back(buf);
        }
    }

    const std::size_t nd = cfg.deltas.size();
    const std::size_t reps = static_cast<std::size_t>(cfg.reps);
    const std::size_t cells = cfg.zs.size() * nd * reps;
    std::vector<std::optional<HestonRow>> rows(cells);
    std::vector<std::string> failures(cells);
    std::vector<std::vector<double>> cell_slr(cells);  // per replicate, pooled below

    parallel_for(cfg.mode, cells, [&](std::size_t c) {
        const std::size_t zi = c / (nd * reps);
        const std::size_t di = (c / reps) % nd;
        const int rep = static_cast<int>(c % reps);
        const std::string label = cell_label(cfg.zs[zi], cfg.deltas[di], rep);
        try {
            HestonConfig hc;
            hc.z = cfg.zs[zi];
            hc.epsilon = cfg.epsilon;
            hc.horizon_T = cfg.horizon_T;
            hc.delta = cfg.deltas[di];
            hc.rho = cfg.rho;
            hc.seed = derive_seed(cfg.seed, zi, di, static_cast<std::uint64_t>(rep));

            const ObservedPath path = simulate_observed(hc);
            const std::size_t m = ms[di];
            const std::size_t n_obs = path.integrated_variance.size();

            // |SLR| aligned with the marks (dead intervals -> NaN) so block
            // membership survives any skipped points.
            std::vector<double> abs_slr(n_obs, kNaN);
            std::vector<double> slr_clean;
            slr_clean.reserve(n_obs);
            for (std::size_t j = 0; j < n_obs; ++j) {
                const double iv = path.integrated_variance[j];
                if (!(iv > 0.0)) continue;
                const double s = (path.logp[j + 1] - path.logp[j]) / std::sqrt(iv);
                abs_slr[j] = std::fabs(s);
                slr_clean.push_back(s);
            }

            MaximaSeries series;
            series.symbol = label;
            series.block_size_m = m;
            series.block_span_days = static_cast<int>(cfg.block_duration);
            for (std::size_t b = 0; b < n_blocks; ++b) {
                double hi = -1.0;
                for (std::size_t j = b * m; j < (b + 1) * m; ++j)
                    if (!std::isnan(abs_slr[j])) hi = std::max(hi, abs_slr[j]);
                if (hi < 0.0) {
                    ++series.skipped_blocks;
                    continue;
                }
                series.maxima.push_back(
                    {static_cast<std::int64_t>((b + 1) * m), hi, false});
            }

            const RollingSamples samples = rolling_samples(series, cfg.window);
            const RiskTrajectory traj = fit_trajectory(samples, label, cfg.fit, cfg.gate,
                                                       cfg.var_level, ExecMode::Serial);
            const StabilityResult st =
                stability(traj, m, cfg.window.window_maxima_count_k, cfg.fit);

            HestonRow row;
            row.z = cfg.zs[zi];
            row.delta = cfg.deltas[di];
            row.rep = rep;
            row.mEVI = st.mEVI;
            row.sti = st.sti;
            row.stable = st.stable;
            row.clamped_steps = path.clamped_steps;

            std::size_t ks_ok = 0, passing = 0;
            for (const RiskRecord& r : traj.records) {
                if (r.missing) {
                    ++row.missing_fits;
                    continue;
                }
                ++row.fits;
                row.mpi_max = std::max(row.mpi_max, r.mpi);
                if (r.ks_pvalue > cfg.gate.ks_level) ++ks_ok;
                if (!r.pass) continue;
                ++passing;
                row.mu_bar += r.params.mu;
                row.sigma_bar += r.params.sigma;
                row.var99 += r.var99;
            }
            if (row.fits > 0)
                row.ks_pass_rate = static_cast<double>(ks_ok) / static_cast<double>(row.fits);
            if (passing > 0) {
                row.mu_bar /= static_cast<double>(passing);
                row.sigma_bar /= static_cast<double>(passing);
                row.var99 /= static_cast<double>(passing);
            }

            row.slr_ks_pvalue = ks_test_one_sample(slr_clean, &norm_cdf).pvalue;
            cell_slr[c] = std::move(slr_clean);

            // Matched-tail VaR pairs on non-overlapping windows: the level-q
            // quantile of the block-maximum law equals the per-observation
            // q^(1/m) quantile, so the two routes estimate the same number.
            const std::size_t k = cfg.window.window_maxima_count_k;
            const double qstar = std::pow(cfg.var_level, 1.0 / static_cast<double>(m));
            for (std::size_t w = 0; w < cfg.var_pair_windows; ++w) {
                const std::size_t lo = w * k, hi = (w + 1) * k;
                if (hi > series.maxima.size()) break;
                std::vector<double> ys(k);
                for (std::size_t i = lo; i < hi; ++i) ys[i - lo] = series.maxima[i].y;
                const double gv = gev_var(multi_quantile_fit(ys, cfg.fit).params, cfg.var_level);
                const std::size_t mark_lo =
                    static_cast<std::size_t>(series.maxima[lo].block_end) - m;
                const std::size_t mark_hi =
                    static_cast<std::size_t>(series.maxima[hi - 1].block_end);
                std::vector<double> raw;
                raw.reserve(mark_hi - mark_lo);
                for (std::size_t j = mark_lo; j < mark_hi; ++j)
                    if (!std::isnan(abs_slr[j])) raw.push_back(abs_slr[j]);
                try {
                    row.var_pairs.emplace_back(gv, gp_var(raw, qstar));
                } catch (const DataError&) {
                    // window too thin above the threshold; pair skipped
                }
            }

            rows[c] = std::move(row);
        } catch (const Error& e) {
            const std::string what = e.what();
            failures[c] = what.rfind(label, 0) == 0 ? what : label + ": " + what;
        }
    });

    // Pooled SLR normality per (z, delta): replicates are independent, so the
    // pooled sample supports one sharp KS decision per cell.
    for (std::size_t zi = 0; zi < cfg.zs.size(); ++zi) {
        for (std::size_t di = 0; di < nd; ++di) {
            CellNormality cn;
            cn.z = cfg.zs[zi];
            cn.delta = cfg.deltas[di];
            std::vector<double> pooled;
            for (std::size_t rep = 0; rep < reps; ++rep) {
                const std::size_t c = (zi * nd + di) * reps + rep;
                if (!rows[c].has_value() || cell_slr[c].empty()) continue;
                const double p = rows[c]->slr_ks_pvalue;
                cn.min_rep_pvalue = std::min(cn.min_rep_pvalue, p);
                cn.max_rep_pvalue = std::max(cn.max_rep_pvalue, p);
                ++cn.reps;
                pooled.insert(pooled.end(), cell_slr[c].begin(), cell_slr[c].end());
                cell_slr[c].clear();
                cell_slr[c].shrink_to_fit();
            }
            if (cn.reps == 0) continue;
            cn.pooled_n = pooled.size();
            cn.pooled_pvalue = ks_test_one_sample(pooled, &norm_cdf).pvalue;
            ex.normality.push_back(cn);
        }
    }

    for (std::size_t c = 0; c < cells; ++c) {
        if (rows[c])
            ex.rows.push_back(std::move(*rows[c]));
        else
            ex.failures.push_back(std::move(failures[c]));
    }
    return ex;
}

std::string experiment_csv(const HestonExperiment& ex) {
    std::string out = "z,delta,rep,mEVI,mu_bar,sigma_bar,var99,sti,ks_pass_rate,mpi_max\n";
    char buf[352];
    for (const HestonRow& r : ex.rows) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.z,
                      r.delta, r.rep, r.mEVI, r.mu_bar, r.sigma_bar, r.var99, r.sti,
                      r.ks_pass_rate, r.mpi_max);
        out += buf;
    }
    return out;
}

} // namespace evtrisk
