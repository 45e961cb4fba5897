#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evtrisk {

double sample_mean(std::span<const double> x);
double sample_variance(std::span<const double> x); // unbiased (n-1)

// Linear-interpolation empirical quantile (the R type-7 rule,
// h = (n-1)q + 1 on 1-indexed order statistics).  Input must already be
// sorted ascending; q in [0,1].
double empirical_quantile_sorted(std::span<const double> sorted, double q);

struct KsResult {
    double statistic = 0.0;
    double pvalue = 1.0;
};

// Survival function of the Kolmogorov distribution,
// Q(x) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2), with the theta-dual
// series below x=1 where the alternating form converges slowly.
double kolmogorov_sf(double x);

// Two-sample test with the finite-sample-corrected asymptotic p-value
// (effective size n1*n2/(n1+n2)).
KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample test of x against a continuous CDF.
KsResult ks_test_one_sample(std::span<const double> x, double (*cdf)(double));
struct GevParams;
KsResult ks_test_one_sample_gev(std::span<const double> x, const GevParams& p);

// Sample autocorrelations at lags 1..max_lag (overall-mean, lag-0 normalized).
std::vector<double> autocorrelations(std::span<const double> x, std::size_t max_lag);

} // namespace evtrisk
