#pragma once

#include <cstdint>
#include <vector>

namespace evtrisk {

// Shape/location/scale of a generalized extreme value law.
//   xi > 0: heavy tail (Frechet type), support bounded below at mu - sigma/xi
//   xi = 0: Gumbel
//   xi < 0: bounded above at mu - sigma/xi (Weibull type)
struct GevParams {
    double xi = 0.0;
    double mu = 0.0;
    double sigma = 1.0;
};

// |xi| below this is evaluated on the Gumbel branch; above it the xi-branch
// uses expm1/log1p forms that stay accurate through xi ~ 1e-8..1e-4, so the
// two branches agree to ~1e-6 at the seam.
inline constexpr double kGevXiTol = 1e-8;

// Throws ParamError unless sigma > 0 and all fields are finite.
void gev_validate(const GevParams& p);

// Distribution function, defined on all of R (limit values outside the
// support: 0 below a Frechet lower bound, 1 above a Weibull upper bound).
double gev_cdf(const GevParams& p, double y);

// Density; 0 outside the support.
double gev_pdf(const GevParams& p, double y);

// Quantile function, q in (0,1):
//   mu + sigma * (exp(-xi*loglog) - 1)/xi,  loglog = log(-log q)
// with the Gumbel limit mu - sigma*loglog.
double gev_quantile(const GevParams& p, double q);

// n inverse-CDF draws from a named portable generator (see rng.hpp);
// deterministic for a given seed.
std::vector<double> gev_sample(const GevParams& p, std::size_t n, std::uint64_t seed);

} // namespace evtrisk
