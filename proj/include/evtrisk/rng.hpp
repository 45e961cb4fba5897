#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

namespace evtrisk {

// splitmix64 step; used both as a seed mixer and to decorrelate stream ids.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d4a77c335749b5ULL; // 0x94d049bb133111ebULL variant constant
    return x ^ (x >> 31);
}

// Derive an independent stream seed from a base seed and up to three stream
// ids (replicate index, grid index, time index, a symbol hash, ...).  Pure
// function of its inputs, so every consumer of randomness is reproducible
// from the config seed alone regardless of scheduling order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base ^ 0x5851f42d4c957f2dULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    s = splitmix64(s ^ c);
    return s;
}

inline std::uint64_t hash_string(const std::string& s) {
    // FNV-1a
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// Sampling generator: std::mt19937_64 (the named, seedable 64-bit Mersenne
// Twister whose output sequence is fixed by the standard).  Uniform variates
// are built from the raw 53 high bits rather than through
// std::uniform_real_distribution, whose mapping is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on the open interval (0,1): never 0 or 1, so log/log-log
    // transforms downstream are always finite.
    double uniform() {
        const std::uint64_t bits = gen_() >> 11; // 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

    // A pair of independent standard normals by the Box-Muller transform,
    // built from uniform() alone (uniform() never returns 0, so the log is
    // finite).  A pair per call suits steppers that consume two increments
    // per step.
    std::pair<double, double> normal_pair() {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 2.0 * 3.14159265358979323846 * uniform();
        return {r * std::cos(a), r * std::sin(a)};
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace evtrisk
