// SPDX-License-Identifier: Apache-2.0
//
// Statistical comparison of IQ ensembles: magnitude variance, two-sample
// Kolmogorov-Smirnov, 1-D Wasserstein, temporal auto/cross-correlation,
// waterfall export and a linear max-margin classification harness.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nextsense/core.hpp"

namespace nextsense::validation {

inline constexpr int kStatsFormatVersion = 1;

/// Scales t so that its mean |x|^2 is 1. Throws on a zero-power tensor.
IQTensor power_normalize(const IQTensor& t);

/// Population variance of |x| over all elements.
double magnitude_variance(const IQTensor& t);

std::vector<double> magnitudes(const IQTensor& t);
std::vector<double> phases(const IQTensor& t);

// ---------------------------------------------------------------------------
// Two-sample tests

struct KsResult {
    double d = 0.0;
    double p = 1.0;
};

/// d = sup |ECDF_a - ECDF_b|; p from the asymptotic Kolmogorov distribution
/// at lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) d, ne = na nb / (na + nb).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

double ks_p_value(double d, std::size_t na, std::size_t nb);

/// W1 = integral |ECDF_a - ECDF_b| dx. Equal sizes use the sorted-pair mean.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Correlation and waterfall

/// Lags 0..max_lag of Re{sum_n conj(x_n) x_(n+m)} / sum_n |x_n|^2 (biased),
/// computed per (k, s) series and averaged over series with non-zero energy.
std::vector<double> temporal_autocorrelation(const IQTensor& t, std::size_t max_lag);

/// Same estimator across a pair, normalized by sqrt(E_a E_b) per series.
std::vector<double> cross_correlation(const IQTensor& a, const IQTensor& b, std::size_t max_lag);

inline constexpr double kWaterfallFloorDb = -120.0;

/// rows = subcarriers, cols = snapshots; values[k * cols + n].
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// 10 log10(mean_s |x(k, s, n)|^2), floored at kWaterfallFloorDb.
Matrix waterfall(const IQTensor& t);

/// CSV with header "subcarrier,n0,n1,..." and one row per subcarrier.
std::string waterfall_csv(const Matrix& m);

// ---------------------------------------------------------------------------
// Ensemble report

struct Histogram {
    std::vector<double> edges; // bins + 1
    std::vector<double> a;     // densities
    std::vector<double> b;
};

struct Cdf {
    std::vector<double> x;
    std::vector<double> a;
    std::vector<double> b;
};

struct EnsembleStats {
    std::vector<std::size_t> dims_a;
    std::vector<std::size_t> dims_b;
    double var_a = 0.0;
    double var_b = 0.0;
    double ks_d = 0.0;
    double ks_p = 1.0;
    double wasserstein = 0.0;
    std::size_t max_lag = 0;
    std::vector<double> autocorr_a;
    std::vector<double> autocorr_b;
    std::vector<double> crosscorr;
    Histogram phase_histogram; // informational, not part of any pass/fail
    Cdf magnitude_cdf;
};

inline constexpr std::size_t kDefaultMaxLag = 50;
inline constexpr std::size_t kPhaseBins = 64;
inline constexpr std::size_t kCdfPoints = 200;

/// Power-normalizes both tensors and fills every field. KS and Wasserstein
/// use the flattened magnitudes. max_lag is clipped to snapshots - 1.
/// Correlation curves need equal shapes; otherwise they stay empty.
EnsembleStats ensemble_report(const IQTensor& a, const IQTensor& b, std::size_t max_lag = kDefaultMaxLag);

nlohmann::json to_json(const EnsembleStats& stats);

// ---------------------------------------------------------------------------
// Classification harness

struct ClassifierConfig {
    double lambda = 1e-2;           // L2 regularization
    std::size_t iterations = 20000; // stochastic sub-gradient steps
    std::uint64_t seed = 1;
};

struct ClassifierResult {
    double accuracy = 0.0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::vector<double> weights; // on z-scored features
    double bias = 0.0;
};

/// Per-subcarrier mean |x| of the power-normalized tensor.
std::vector<double> magnitude_features(const IQTensor& t);

/// Linear SVM (hinge loss, Pegasos sub-gradient steps) on z-scored
/// magnitude features. Stratified seeded split: train_fraction of each class
/// trains, the rest is held out. Needs >= 10 tensors per class.
ClassifierResult train_eval_classifier(std::span<const IQTensor> class_a, std::span<const IQTensor> class_b,
                                       double train_fraction, const ClassifierConfig& config = {});

} // namespace nextsense::validation
