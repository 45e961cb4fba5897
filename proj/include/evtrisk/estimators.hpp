#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "evtrisk/gev.hpp"

namespace evtrisk {

// A percentile triple 0 < q1 < q2 < q3 < 1 defining one shape estimator.
struct QuantileTriple {
    double q1 = 0.25;
    double q2 = 0.50;
    double q3 = 0.75;
};

enum class WeightMode { Optimized, Uniform };

struct MultiQuantileConfig {
    std::vector<QuantileTriple> triples;        // p >= 1, distinct
    WeightMode weight_mode = WeightMode::Optimized;
    QuantileTriple central{0.25, 0.50, 0.75};   // sigma/mu recovered here
    double condition_limit = 1e12;              // covariance fallback guard
    double xi_bracket = 10.0;                   // root search in [-b, b]
    double root_tol = 1e-10;

    MultiQuantileConfig();
    void validate() const;
};

struct FitResult {
    GevParams params;
    std::vector<double> weights;   // per configured triple; 0 where dropped
    double xi_variance = 0.0;      // var of sqrt(n)(xi_hat - xi), no 1/n
    std::size_t sample_size = 0;
    bool uniform_fallback = false; // ill-conditioned covariance encountered
    std::size_t dropped_triples = 0;
};

// Convenience overload of the sorted-input version in stats.hpp.
double empirical_quantile(std::span<const double> sample, double q);

// The shape estimator from one percentile triple: the unique xi solving
//   R(xi) = (Q^3 - Q^2)/(Q^2 - Q^1),
//   R(xi) = (e^{-xi L3} - e^{-xi L2})/(e^{-xi L2} - e^{-xi L1}),
// with L_i = log(-log q_i); R is strictly increasing, R(0) = (L2-L3)/(L1-L2).
double three_quantile_xi(std::span<const double> sample, const QuantileTriple& t,
                         double bracket = 10.0, double tol = 1e-10);

// Scale/location given a shape:
//   sigma = xi (Q^2 - Q^1)/(e^{-xi L2} - e^{-xi L1})
//   mu    = Q^2 - (sigma/xi)(e^{-xi L2} - 1)
// with their xi -> 0 limits.  Returns (sigma, mu).
std::pair<double, double> fit_sigma_mu(std::span<const double> sample, double xi,
                                       const QuantileTriple& t);

// Weighted multi-triple fit.  Per-triple shapes, delta-method covariance C
// evaluated at a uniform-weight pilot, then min-variance weights
// w = C^-1 1 / (1^T C^-1 1) (single step, no iteration); sigma/mu refit at
// cfg.central with the weighted shape.
FitResult multi_quantile_fit(std::span<const double> sample,
                             const MultiQuantileConfig& cfg = {});

// Asymptotic variance of sqrt(n)(xi_hat - xi) at a known shape, from exact
// GEV quantiles/densities rather than a sample.  Drives stability margins.
double xi_asymptotic_variance(double xi, const MultiQuantileConfig& cfg = {});

// The p x p covariance of the per-triple estimators at a known shape
// (exposed for tests and for the variance above).
std::vector<double> xi_covariance(double xi, std::span<const QuantileTriple> triples);

} // namespace evtrisk
