#include "evtrisk/stats.hpp"

#include <algorithm>
#include <cmath>

#include "evtrisk/errors.hpp"
#include "evtrisk/gev.hpp"

namespace evtrisk {

double sample_mean(std::span<const double> x) {
    if (x.empty())
        throw DataError("sample_mean: empty input");
    double s = 0.0;
    for (double v : x)
        s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2)
        throw DataError("sample_variance: need at least 2 points");
    const double m = sample_mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double empirical_quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty())
        throw DataError("empirical_quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0))
        throw ParamError("empirical_quantile: q must lie in [0,1]");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size())
        return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double kolmogorov_sf(double x) {
    if (x <= 0.0)
        return 1.0;
    if (x < 1.0) {
        // P(K <= x) = sqrt(2 pi)/x * sum_{k odd} exp(-k^2 pi^2 / (8 x^2))
        const double w = M_PI * M_PI / (8.0 * x * x);
        double cdf = 0.0;
        for (int k = 1; k < 40; k += 2) {
            const double term = std::exp(-static_cast<double>(k) * k * w);
            cdf += term;
            if (term < 1e-18)
                break;
        }
        cdf *= std::sqrt(2.0 * M_PI) / x;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sf = 0.0;
    double sign = 1.0;
    for (int j = 1; j < 200; ++j) {
        const double term = std::exp(-2.0 * j * j * x * x);
        sf += sign * term;
        sign = -sign;
        if (term < 1e-18)
            break;
    }
    return std::clamp(2.0 * sf, 0.0, 1.0);
}

namespace {

double corrected_pvalue(double d, double ne) {
    const double s = std::sqrt(ne);
    return kolmogorov_sf((s + 0.12 + 0.11 / s) * d);
}

} // namespace

KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw DataError("ks_test_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double vx = x[i], vy = y[j];
        if (vx <= vy)
            while (i < x.size() && x[i] == vx)
                ++i;
        if (vy <= vx)
            while (j < y.size() && y[j] == vy)
                ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return {d, corrected_pvalue(d, nx * ny / (nx + ny))};
}

namespace {

template <typename Cdf>
KsResult one_sample_impl(std::span<const double> xs, Cdf&& cdf) {
    if (xs.empty())
        throw DataError("ks_test_one_sample: empty sample");
    std::vector<double> x(xs.begin(), xs.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return {d, corrected_pvalue(d, n)};
}

} // namespace

KsResult ks_test_one_sample(std::span<const double> x, double (*cdf)(double)) {
    return one_sample_impl(x, cdf);
}

KsResult ks_test_one_sample_gev(std::span<const double> x, const GevParams& p) {
    return one_sample_impl(x, [&p](double v) { return gev_cdf(p, v); });
}

std::vector<double> autocorrelations(std::span<const double> x, std::size_t max_lag) {
    if (x.size() < max_lag + 2)
        throw DataError("autocorrelations: series shorter than max_lag");
    const double m = sample_mean(x);
    const std::size_t n = x.size();
    double c0 = 0.0;
    for (double v : x)
        c0 += (v - m) * (v - m);
    if (c0 == 0.0)
        throw DataError("autocorrelations: constant series");
    std::vector<double> acf(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t i = lag; i < n; ++i)
            c += (x[i] - m) * (x[i - lag] - m);
        acf[lag - 1] = c / c0;
    }
    return acf;
}

} // namespace evtrisk
