#include "evtrisk/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>

#include "evtrisk/errors.hpp"
#include "evtrisk/linalg.hpp"
#include "evtrisk/stats.hpp"

namespace evtrisk {

namespace {

double loglog(double q) { return std::log(-std::log(q)); }

// E(xi, L) = (e^{-xi L} - 1)/xi, continuous through xi = 0 (limit -L).
// This single primitive makes the ratio R, sigma, and mu all stable on the
// Gumbel seam.
double e_ratio(double xi, double L) {
    if (std::fabs(xi) < kGevXiTol)
        return -L + 0.5 * xi * L * L;
    return std::expm1(-xi * L) / xi;
}

struct TripleLL {
    double l1, l2, l3;
};

TripleLL lls(const QuantileTriple& t) { return {loglog(t.q1), loglog(t.q2), loglog(t.q3)}; }

double ratio_r(double xi, const TripleLL& l) {
    const double e1 = e_ratio(xi, l.l1);
    const double e2 = e_ratio(xi, l.l2);
    const double e3 = e_ratio(xi, l.l3);
    return (e3 - e2) / (e2 - e1);
}

double ratio_r_deriv(double xi, const TripleLL& l) {
    const double h = 1e-6 * std::max(1.0, std::fabs(xi));
    return (ratio_r(xi + h, l) - ratio_r(xi - h, l)) / (2.0 * h);
}

void validate_triple(const QuantileTriple& t) {
    if (!(t.q1 > 0.0 && t.q1 < t.q2 && t.q2 < t.q3 && t.q3 < 1.0))
        throw ParamError("quantile triple must satisfy 0 < q1 < q2 < q3 < 1");
}

// Solve R(xi) = rho on [-bracket, bracket]; R is strictly increasing.
double invert_ratio(double rho, const TripleLL& l, double bracket, double tol) {
    double lo = -bracket, hi = bracket;
    double flo = ratio_r(lo, l) - rho, fhi = ratio_r(hi, l) - rho;
    if (flo > 0.0 || fhi < 0.0)
        throw NumericError("three_quantile_xi: quantile ratio outside the xi bracket");
    // Bisection gets within secant's basin, secant polishes.
    for (int i = 0; i < 48; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = ratio_r(mid, l) - rho;
        (fm < 0.0 ? lo : hi) = mid;
        (fm < 0.0 ? flo : fhi) = fm;
    }
    double x0 = lo, x1 = hi, f0 = flo, f1 = fhi;
    for (int i = 0; i < 32 && std::fabs(x1 - x0) > tol; ++i) {
        if (f1 == f0)
            break;
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = std::clamp(x2, -bracket, bracket);
        f1 = ratio_r(x1, l) - rho;
    }
    return x1;
}

struct TripleQuantiles {
    double v1, v2, v3;
};

TripleQuantiles sorted_quantiles(std::span<const double> sorted, const QuantileTriple& t) {
    return {empirical_quantile_sorted(sorted, t.q1),
            empirical_quantile_sorted(sorted, t.q2),
            empirical_quantile_sorted(sorted, t.q3)};
}

double xi_from_quantiles(const TripleQuantiles& q, const QuantileTriple& t,
                         double bracket, double tol) {
    if (!(q.v2 > q.v1) || !(q.v3 > q.v2))
        throw NumericError("three_quantile_xi: degenerate sample quantiles");
    return invert_ratio((q.v3 - q.v2) / (q.v2 - q.v1), lls(t), bracket, tol);
}

std::pair<double, double> sigma_mu_from_quantiles(const TripleQuantiles& q, double xi,
                                                  const QuantileTriple& t) {
    const auto l = lls(t);
    const double e1 = e_ratio(xi, l.l1);
    const double e2 = e_ratio(xi, l.l2);
    const double sigma = (q.v2 - q.v1) / (e2 - e1);
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw NumericError("fit_sigma_mu: nonpositive scale (degenerate sample)");
    const double mu = q.v2 - sigma * e2;
    return {sigma, mu};
}

} // namespace

MultiQuantileConfig::MultiQuantileConfig()
    : triples{{0.10, 0.50, 0.90},
              {0.15, 0.50, 0.85},
              {0.20, 0.50, 0.80},
              {0.25, 0.50, 0.75},
              {0.30, 0.50, 0.70}} {}

void MultiQuantileConfig::validate() const {
    if (triples.empty())
        throw ParamError("multi-quantile config: need at least one triple");
    for (const auto& t : triples)
        validate_triple(t);
    for (std::size_t i = 0; i < triples.size(); ++i)
        for (std::size_t j = i + 1; j < triples.size(); ++j)
            if (triples[i].q1 == triples[j].q1 && triples[i].q2 == triples[j].q2 &&
                triples[i].q3 == triples[j].q3)
                throw ParamError("multi-quantile config: triples must be distinct");
    validate_triple(central);
    if (!(xi_bracket > 0.0) || !(root_tol > 0.0) || !(condition_limit > 1.0))
        throw ParamError("multi-quantile config: bad numeric settings");
}

double empirical_quantile(std::span<const double> sample, double q) {
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    return empirical_quantile_sorted(x, q);
}

double three_quantile_xi(std::span<const double> sample, const QuantileTriple& t,
                         double bracket, double tol) {
    validate_triple(t);
    if (sample.size() < 30)
        throw DataError("three_quantile_xi: need at least 30 observations");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    return xi_from_quantiles(sorted_quantiles(x, t), t, bracket, tol);
}

std::pair<double, double> fit_sigma_mu(std::span<const double> sample, double xi,
                                       const QuantileTriple& t) {
    validate_triple(t);
    if (sample.empty())
        throw DataError("fit_sigma_mu: empty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    return sigma_mu_from_quantiles(sorted_quantiles(x, t), xi, t);
}

// Joint asymptotic covariance of the per-triple shape estimators at a known
// shape.  Empirical quantiles at levels (q_a) of an i.i.d. sample satisfy
//   n Cov(Q^_a, Q^_b) -> (min(q_a,q_b) - q_a q_b) / (g(Q_a) g(Q_b))
// with g the density at the true quantile; each triple's shape is a smooth
// function of its three quantiles, so C = J Cov J^T.  Location and scale
// cancel exactly, hence the canonical (mu, sigma) = (0, 1) evaluation.
std::vector<double> xi_covariance(double xi, std::span<const QuantileTriple> triples) {
    const std::size_t p = triples.size();
    const GevParams canon{xi, 0.0, 1.0};

    std::vector<double> levels;
    std::vector<std::array<std::size_t, 3>> idx(p);
    for (std::size_t j = 0; j < p; ++j) {
        const double qs[3] = {triples[j].q1, triples[j].q2, triples[j].q3};
        for (int k = 0; k < 3; ++k) {
            auto it = std::find(levels.begin(), levels.end(), qs[k]);
            if (it == levels.end()) {
                levels.push_back(qs[k]);
                it = std::prev(levels.end());
            }
            idx[j][k] = static_cast<std::size_t>(it - levels.begin());
        }
    }

    const std::size_t m = levels.size();
    std::vector<double> quant(m), dens(m);
    for (std::size_t a = 0; a < m; ++a) {
        quant[a] = gev_quantile(canon, levels[a]);
        dens[a] = gev_pdf(canon, quant[a]);
    }
    std::vector<double> covq(m * m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            covq[a * m + b] = (std::min(levels[a], levels[b]) - levels[a] * levels[b]) /
                              (dens[a] * dens[b]);

    // Gradient of each triple's shape estimate w.r.t. its three quantiles.
    std::vector<std::array<double, 3>> grad(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto l = lls(triples[j]);
        const double q1 = quant[idx[j][0]], q2 = quant[idx[j][1]], q3 = quant[idx[j][2]];
        const double d21 = q2 - q1;
        const double rho = (q3 - q2) / d21;
        const double rp = ratio_r_deriv(xi, l);
        grad[j] = {rho / (d21 * rp), -(q3 - q1) / (d21 * d21 * rp), 1.0 / (d21 * rp)};
    }

    std::vector<double> c(p * p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    s += grad[j][a] * grad[k][b] * covq[idx[j][a] * m + idx[k][b]];
            c[j * p + k] = s;
        }
    return c;
}

namespace {

// Min-variance weights under a sum-to-one constraint, with the uniform
// fallback on an ill-conditioned covariance.  Returns (weights, fell_back).
std::pair<std::vector<double>, bool> solve_weights(const std::vector<double>& c,
                                                   std::size_t p, WeightMode mode,
                                                   double condition_limit) {
    std::vector<double> w(p, 1.0 / static_cast<double>(p));
    if (mode == WeightMode::Uniform || p == 1)
        return {w, false};
    const auto eig = sym_eigen(c, p);
    if (!(spd_condition(eig) <= condition_limit))
        return {w, true};
    auto ci = sym_solve(eig, std::vector<double>(p, 1.0));
    double s = 0.0;
    for (double v : ci)
        s += v;
    if (s == 0.0 || !std::isfinite(s))
        return {w, true};
    for (std::size_t j = 0; j < p; ++j)
        w[j] = ci[j] / s;
    return {w, false};
}

double quadratic_form(const std::vector<double>& c, const std::vector<double>& w) {
    const std::size_t p = w.size();
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k)
            s += w[j] * c[j * p + k] * w[k];
    return s;
}

} // namespace

FitResult multi_quantile_fit(std::span<const double> sample, const MultiQuantileConfig& cfg) {
    cfg.validate();
    if (sample.size() < 30)
        throw DataError("multi_quantile_fit: need at least 30 observations");

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());

    const std::size_t p = cfg.triples.size();
    std::vector<double> xi_j;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < p; ++j) {
        try {
            xi_j.push_back(xi_from_quantiles(sorted_quantiles(x, cfg.triples[j]),
                                             cfg.triples[j], cfg.xi_bracket, cfg.root_tol));
            kept.push_back(j);
        } catch (const NumericError&) {
            // triple dropped; fatal only if none survive
        }
    }
    if (kept.empty())
        throw NumericError("multi_quantile_fit: every triple degenerate");

    double pilot = 0.0;
    for (double v : xi_j)
        pilot += v;
    pilot /= static_cast<double>(xi_j.size());

    std::vector<QuantileTriple> surv;
    for (std::size_t j : kept)
        surv.push_back(cfg.triples[j]);
    const auto c = xi_covariance(pilot, surv);
    auto [w, fell_back] = solve_weights(c, surv.size(), cfg.weight_mode, cfg.condition_limit);

    FitResult out;
    out.sample_size = sample.size();
    out.dropped_triples = p - kept.size();
    out.uniform_fallback = fell_back;
    out.weights.assign(p, 0.0);
    double xi_hat = 0.0;
    for (std::size_t s = 0; s < kept.size(); ++s) {
        out.weights[kept[s]] = w[s];
        xi_hat += w[s] * xi_j[s];
    }
    out.xi_variance = quadratic_form(c, w);

    auto [sigma, mu] = sigma_mu_from_quantiles(sorted_quantiles(x, cfg.central), xi_hat,
                                               cfg.central);
    out.params = {xi_hat, mu, sigma};
    return out;
}

double xi_asymptotic_variance(double xi, const MultiQuantileConfig& cfg) {
    cfg.validate();
    const auto c = xi_covariance(xi, cfg.triples);
    auto [w, fell_back] =
        solve_weights(c, cfg.triples.size(), cfg.weight_mode, cfg.condition_limit);
    (void)fell_back;
    return quadratic_form(c, w);
}

} // namespace evtrisk
