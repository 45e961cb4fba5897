#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "evtrisk/errors.hpp"

namespace evtrisk {

// Dense symmetric eigen-decomposition by cyclic Jacobi rotations.  The
// matrices here are tiny (p x p covariance of a handful of estimators), so
// robustness beats asymptotics.  a is row-major p x p, symmetric.
struct SymEigen {
    std::vector<double> values;  // ascending-unordered eigenvalues
    std::vector<double> vectors; // row-major, column k = eigenvector k
};

inline SymEigen sym_eigen(std::vector<double> a, std::size_t p) {
    if (a.size() != p * p || p == 0)
        throw ParamError("sym_eigen: bad dimensions");
    std::vector<double> v(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        v[i * p + i] = 1.0;

    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j)
                off += a[i * p + j] * a[i * p + j];
        if (off < 1e-300 || std::sqrt(off) < 1e-15 * (1.0 + std::fabs(a[0])))
            break;
        for (std::size_t i = 0; i + 1 < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                const double apq = a[i * p + j];
                if (std::fabs(apq) < 1e-300)
                    continue;
                const double app = a[i * p + i], aqq = a[j * p + j];
                const double theta = 0.5 * (aqq - app) / apq;
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < p; ++k) {
                    const double aik = a[k * p + i], ajk = a[k * p + j];
                    a[k * p + i] = c * aik - s * ajk;
                    a[k * p + j] = s * aik + c * ajk;
                }
                for (std::size_t k = 0; k < p; ++k) {
                    const double aik = a[i * p + k], ajk = a[j * p + k];
                    a[i * p + k] = c * aik - s * ajk;
                    a[j * p + k] = s * aik + c * ajk;
                    const double vik = v[k * p + i], vjk = v[k * p + j];
                    v[k * p + i] = c * vik - s * vjk;
                    v[k * p + j] = s * vik + c * vjk;
                }
            }
        }
    }

    SymEigen out;
    out.values.resize(p);
    for (std::size_t i = 0; i < p; ++i)
        out.values[i] = a[i * p + i];
    out.vectors = std::move(v);
    return out;
}

// 2-norm condition number lambda_max / lambda_min (absolute values);
// infinity when the smallest eigenvalue underflows to 0.
inline double spd_condition(const SymEigen& e) {
    double lo = std::fabs(e.values[0]), hi = lo;
    for (double l : e.values) {
        lo = std::min(lo, std::fabs(l));
        hi = std::max(hi, std::fabs(l));
    }
    if (lo == 0.0)
        return std::numeric_limits<double>::infinity();
    return hi / lo;
}

// Solve A x = b through the decomposition: x = V diag(1/lambda) V^T b.
inline std::vector<double> sym_solve(const SymEigen& e, const std::vector<double>& b) {
    const std::size_t p = e.values.size();
    if (b.size() != p)
        throw ParamError("sym_solve: bad dimensions");
    std::vector<double> x(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            proj += e.vectors[i * p + k] * b[i];
        if (e.values[k] == 0.0)
            throw NumericError("sym_solve: singular matrix");
        proj /= e.values[k];
        for (std::size_t i = 0; i < p; ++i)
            x[i] += e.vectors[i * p + k] * proj;
    }
    return x;
}

} // namespace evtrisk
