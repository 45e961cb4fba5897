#pragma once

namespace evtrisk {

double norm_pdf(double x);

// Standard normal distribution function via erfc (accurate in both tails).
double norm_cdf(double x);

// Standard normal quantile, Wichura's algorithm (full double precision).
// p in (0,1); throws ParamError otherwise.
double norm_quantile(double p);

} // namespace evtrisk
