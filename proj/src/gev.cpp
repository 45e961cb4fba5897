#include "evtrisk/gev.hpp"

#include <cmath>

#include "evtrisk/errors.hpp"
#include "evtrisk/rng.hpp"

namespace evtrisk {

void gev_validate(const GevParams& p) {
    if (!std::isfinite(p.xi) || !std::isfinite(p.mu) || !std::isfinite(p.sigma))
        throw ParamError("gev: parameters must be finite");
    if (p.sigma <= 0.0)
        throw ParamError("gev: sigma must be > 0");
}

double gev_cdf(const GevParams& p, double y) {
    gev_validate(p);
    const double z = (y - p.mu) / p.sigma;
    if (std::fabs(p.xi) < kGevXiTol)
        return std::exp(-std::exp(-z));
    const double t = 1.0 + p.xi * z;
    if (t <= 0.0)
        return p.xi > 0.0 ? 0.0 : 1.0; // limit values outside the support
    // t^(-1/xi) via log1p keeps the xi->0 seam accurate
    return std::exp(-std::exp(-std::log1p(p.xi * z) / p.xi));
}

double gev_pdf(const GevParams& p, double y) {
    gev_validate(p);
    const double z = (y - p.mu) / p.sigma;
    if (std::fabs(p.xi) < kGevXiTol) {
        const double w = std::exp(-z);
        return std::exp(-z - w) / p.sigma;
    }
    const double t = 1.0 + p.xi * z;
    if (t <= 0.0)
        return 0.0;
    const double s = std::log1p(p.xi * z);
    return std::exp(-(1.0 / p.xi + 1.0) * s - std::exp(-s / p.xi)) / p.sigma;
}

double gev_quantile(const GevParams& p, double q) {
    gev_validate(p);
    if (!(q > 0.0 && q < 1.0))
        throw ParamError("gev_quantile: q must lie in (0,1)");
    const double loglog = std::log(-std::log(q));
    if (std::fabs(p.xi) < kGevXiTol)
        return p.mu - p.sigma * loglog;
    return p.mu + p.sigma * std::expm1(-p.xi * loglog) / p.xi;
}

std::vector<double> gev_sample(const GevParams& p, std::size_t n, std::uint64_t seed) {
    gev_validate(p);
    std::vector<double> out(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = gev_quantile(p, rng.uniform());
    return out;
}

} // namespace evtrisk
