#include "evtrisk/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evtrisk/errors.hpp"

namespace evtrisk {

namespace {

// Log density of the Student-t predictive for one more observation given a
// run holding n points with the given sum and sum of squares.
double log_predictive(double x, std::size_t n, double sum, double sumsq,
                      const BocdConfig& cfg) {
    const double nn = static_cast<double>(n);
    const double kappa = cfg.kappa0 + nn;
    const double mu = (cfg.kappa0 * cfg.mu0 + sum) / kappa;
    const double alpha = cfg.alpha0 + 0.5 * nn;
    double beta = cfg.beta0;
    if (n > 0) {
        const double mean = sum / nn;
        const double ss = std::max(0.0, sumsq - nn * mean * mean);
        beta += 0.5 * ss +
                0.5 * cfg.kappa0 * nn * (mean - cfg.mu0) * (mean - cfg.mu0) / kappa;
    }
    const double nu = 2.0 * alpha;
    const double scale2 = beta * (kappa + 1.0) / (alpha * kappa);
    const double z2 = (x - mu) * (x - mu) / scale2;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * std::numbers::pi * scale2) -
           0.5 * (nu + 1.0) * std::log1p(z2 / nu);
}

}  // namespace

void BocdConfig::validate() const {
    if (!(hazard_lambda > 0.0) || !std::isfinite(hazard_lambda))
        throw ParamError("bocd: hazard must be positive");
    if (thin == 0)
        throw ParamError("bocd: thinning stride must be positive");
    if (!(min_collapse_posterior >= 0.0 && min_collapse_posterior < 1.0))
        throw ParamError("bocd: collapse confirmation threshold outside [0, 1)");
    if (!(kappa0 > 0.0) || !(alpha0 > 0.0) || !(beta0 > 0.0))
        throw ParamError("bocd: prior parameters must be positive");
}

ChangepointReport bocd(std::span<const double> series, const BocdConfig& cfg,
                       const std::string& series_id) {
    cfg.validate();
    std::vector<double> xs;
    xs.reserve(series.size() / cfg.thin + 1);
    for (std::size_t i = 0; i < series.size(); i += cfg.thin) xs.push_back(series[i]);
    if (xs.size() < 20)
        throw DataError("bocd: needs at least 20 analyzed points, got " +
                        std::to_string(xs.size()));

    const double h = 1.0 / cfg.hazard_lambda;

    ChangepointReport report;
    report.series = series_id;
    report.hazard_lambda = cfg.hazard_lambda;

    // weights[r] is the posterior mass of "the current run holds the last r
    // points"; sums/sumsqs are the matching sufficient statistics.
    std::vector<double> weights{1.0}, sums{0.0}, sumsqs{0.0};
    std::size_t prev_mode = 0;

    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        weights.push_back(0.0);
        sums.push_back(0.0);
        sumsqs.push_back(0.0);

        double changed = 0.0;
        for (std::size_t r = i + 1; r-- > 0;) {
            const double p = std::exp(log_predictive(x, r, sums[r], sumsqs[r], cfg));
            const double joint = weights[r] * p;
            changed += joint * h;
            weights[r + 1] = joint * (1.0 - h);
            sums[r + 1] = sums[r] + x;
            sumsqs[r + 1] = sumsqs[r] + x * x;
        }
        weights[0] = changed;
        sums[0] = 0.0;
        sumsqs[0] = 0.0;

        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0))
            throw NumericError("bocd: run-length posterior lost all mass");
        for (double& w : weights) w /= total;

        const std::size_t mode = static_cast<std::size_t>(
            std::max_element(weights.begin(), weights.end()) - weights.begin());

        if (static_cast<double>(mode) < 0.5 * static_cast<double>(prev_mode)) {
            double collapse = 0.0;
            for (std::size_t r = 0; r <= mode; ++r) collapse += weights[r];
            if (collapse > cfg.min_collapse_posterior) {
                // the new run holds the last `mode` points, so it started here
                const std::size_t start = i + 1 - mode;
                report.changepoints.push_back(
                    {static_cast<std::int64_t>(start * cfg.thin), collapse});
            }
        }
        prev_mode = mode;
    }
    return report;
}

ChangepointReport evi_changepoints(const RiskTrajectory& traj, BocdConfig cfg) {
    std::vector<double> xi;
    std::vector<std::int64_t> times;
    xi.reserve(traj.records.size());
    times.reserve(traj.records.size());
    for (const RiskRecord& rec : traj.records) {
        if (rec.missing) continue;
        xi.push_back(rec.params.xi);
        times.push_back(rec.t);
    }
    ChangepointReport report = bocd(xi, cfg, traj.symbol);
    for (Changepoint& cp : report.changepoints)
        cp.t = times[static_cast<std::size_t>(cp.t)];
    return report;
}

JumpReport detect_jumps(const SlrSeries& slr, const RiskTrajectory& traj) {
    JumpReport report;
    report.symbol = slr.symbol;

    std::vector<const RiskRecord*> fits;
    fits.reserve(traj.records.size());
    for (const RiskRecord& rec : traj.records)
        if (!rec.missing) fits.push_back(&rec);

    std::size_t next_fit = 0;
    const RiskRecord* current = nullptr;
    for (const SlrPoint& pt : slr.points) {
        while (next_fit < fits.size() && fits[next_fit]->t <= pt.t_epoch)
            current = fits[next_fit++];
        if (current == nullptr) {
            ++report.skipped_before_first_fit;
            continue;
        }
        if (std::fabs(pt.slr) > current->var99)
            report.jumps.push_back({pt.t_epoch, pt.slr, current->var99});
    }
    return report;
}

}  // namespace evtrisk
