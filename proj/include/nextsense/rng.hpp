// SPDX-License-Identifier: Apache-2.0
//
// Seeded random sources. Everything here is specified down to the bit so that
// datasets are reproducible across standard libraries: the engine is
// std::mt19937_64 (output fully specified by the standard) and the uniform and
// Gaussian transforms are written out instead of using <random> distributions.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "nextsense/core.hpp"

namespace nextsense {

/// SplitMix64 finalizer. Used as a counter-based generator: the same
/// (key, counter) pair always yields the same word.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent sub-seed from a parent seed and a stream label.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0)
{
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(seed ^ h) + index);
}

class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// Circular complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance)
    {
        const double sigma = std::sqrt(variance / 2.0);
        const double re = normal();
        const double im = normal();
        return {sigma * re, sigma * im};
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace nextsense
