// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used as test oracles. None of these
// call into the library code they check.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "nextsense/core.hpp"

namespace nextsense::testing {

inline constexpr double kTwoPi = 2.0 * kPi;

/// O(K^2) DFT. sign = -1 forward (unscaled), +1 inverse (scaled by 1/K).
inline std::vector<cplx> brute_dft(const std::vector<cplx>& in, int sign)
{
    const std::size_t n = in.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        for (std::size_t m = 0; m < n; ++m) {
            // reduce k*m mod n first so the angle stays small and exact-ish
            const double angle = sign * kTwoPi * static_cast<double>((k * m) % n) / static_cast<double>(n);
            acc += in[m] * cplx(std::cos(angle), std::sin(angle));
        }
        out[k] = sign > 0 ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

/// sup |ECDF_a - ECDF_b| evaluated at every sample point.
inline double brute_ks_d(const std::vector<double>& a, const std::vector<double>& b)
{
    auto ecdf = [](const std::vector<double>& s, double x) {
        return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) /
               static_cast<double>(s.size());
    };
    double d = 0.0;
    for (const auto* s : {&a, &b}) {
        for (double x : *s) {
            d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
        }
    }
    return d;
}

/// W1 as the integral over u in (0, 1) of |Qa(u) - Qb(u)|, with the quantile
/// functions evaluated on a grid of step 1 / (na * nb). Both quantile
/// functions are constant on every grid cell, so the midpoint rule is exact.
inline double quantile_wasserstein(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t cells = na * nb;
    long double acc = 0.0L;
    for (std::size_t c = 0; c < cells; ++c) {
        // u in (c / cells, (c+1) / cells): Qa picks index floor(u * na) = c / nb
        const double qa = a[c / nb];
        const double qb = b[c / na];
        acc += std::abs(static_cast<long double>(qa) - qb);
    }
    return static_cast<double>(acc / static_cast<long double>(cells));
}

/// Exact two-sample KS p-value, P(D >= d_obs) under random relabeling, by
/// enumerating every split of the pooled sample (small sizes only).
inline double exact_ks_p(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const double d_obs = brute_ks_d(a, b);
    const std::size_t n = pooled.size();
    const std::size_t na = a.size();
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(na), true);
    std::size_t total = 0;
    std::size_t extreme = 0;
    do {
        std::vector<double> sa;
        std::vector<double> sb;
        for (std::size_t i = 0; i < n; ++i) {
            (mask[i] ? sa : sb).push_back(pooled[i]);
        }
        ++total;
        if (brute_ks_d(sa, sb) >= d_obs - 1e-12) {
            ++extreme;
        }
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

/// Exact P(D >= k / n) for two samples of equal size n, by counting the
/// monotone lattice paths from (0, 0) to (n, n) that stay within |i - j| < k.
inline double exact_ks_p_equal(std::size_t n, std::size_t k)
{
    if (k == 0) {
        return 1.0;
    }
    // row-by-row path counts; doubles hold C(2n, n) up to n of about 500
    std::vector<double> row(n + 1, 0.0);
    for (std::size_t j = 0; j <= n && j < k; ++j) {
        row[j] = 1.0;
    }
    for (std::size_t i = 1; i <= n; ++i) {
        std::vector<double> next(n + 1, 0.0);
        for (std::size_t j = 0; j <= n; ++j) {
            const std::size_t gap = i > j ? i - j : j - i;
            if (gap >= k) {
                continue;
            }
            next[j] = row[j] + (j > 0 ? next[j - 1] : 0.0);
        }
        row = std::move(next);
    }
    double total = 1.0; // C(2n, n)
    for (std::size_t i = 1; i <= n; ++i) {
        total = total * static_cast<double>(n + i) / static_cast<double>(i);
    }
    return 1.0 - row[n] / total;
}

/// Fresh scratch directory under NEXTSENSE_TEST_TMP (or the system temp).
inline std::filesystem::path scratch_dir(const std::string& name)
{
    static std::atomic<int> counter{0};
    const char* root = std::getenv("NEXTSENSE_TEST_TMP");
    std::filesystem::path base = root != nullptr ? std::filesystem::path(root) : std::filesystem::temp_directory_path();
    const auto dir = base / (name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<cplx> random_complex(std::size_t n, std::mt19937_64& gen)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<cplx> v(n);
    for (auto& x : v) {
        x = cplx(nd(gen), nd(gen));
    }
    return v;
}

} // namespace nextsense::testing
