// SPDX-License-Identifier: Apache-2.0

#include "nextsense/validation.hpp"

#include <algorithm>
#include <cmath>

#include "nextsense/channel.hpp"
#include "nextsense/waveform.hpp"

namespace nextsense::validation {

namespace {

void require_non_empty(std::span<const double> a, std::span<const double> b, const char* op)
{
    if (a.empty() || b.empty()) {
        throw ValidationError(std::string(op) + ": both samples must be non-empty");
    }
}

std::vector<double> sorted_copy(std::span<const double> v)
{
    std::vector<double> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> dims_of(const IQTensor& t)
{
    return {t.subcarriers(), t.symbols(), t.snapshots()};
}

// Shared by auto- and cross-correlation so that a == b gives identical curves.
std::vector<double> correlate(const IQTensor& a, const IQTensor& b, std::size_t max_lag, const char* op)
{
    if (!a.same_shape(b)) {
        throw ValidationError(std::string(op) + ": shapes differ (" + a.shape_string() + " vs " + b.shape_string() +
                              ")");
    }
    const std::size_t n_count = a.snapshots();
    if (n_count < max_lag + 1) {
        throw ValidationError(std::string(op) + ": need at least max_lag + 1 = " + std::to_string(max_lag + 1) +
                              " snapshots, have " + std::to_string(n_count));
    }
    const std::size_t series = a.subcarriers() * a.symbols();
    const cplx* pa = a.data().data();
    const cplx* pb = b.data().data();
    std::vector<double> ea(series, 0.0);
    std::vector<double> eb(series, 0.0);
    for (std::size_t n = 0; n < n_count; ++n) {
        for (std::size_t i = 0; i < series; ++i) {
            ea[i] += std::norm(pa[n * series + i]);
            eb[i] += std::norm(pb[n * series + i]);
        }
    }
    std::vector<double> inv_norm(series, 0.0);
    std::size_t used = 0;
    for (std::size_t i = 0; i < series; ++i) {
        if (ea[i] > 0.0 && eb[i] > 0.0) {
            inv_norm[i] = 1.0 / std::sqrt(ea[i] * eb[i]);
            ++used;
        }
    }
    std::vector<double> sum(max_lag + 1, 0.0);
    std::vector<double> acc(series);
    for (std::size_t m = 0; m <= max_lag; ++m) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t n = 0; n + m < n_count; ++n) {
            const cplx* x = pa + n * series;
            const cplx* y = pb + (n + m) * series;
            for (std::size_t i = 0; i < series; ++i) {
                acc[i] += x[i].real() * y[i].real() + x[i].imag() * y[i].imag(); // Re{conj(x) y}
            }
        }
        for (std::size_t i = 0; i < series; ++i) {
            sum[m] += acc[i] * inv_norm[i];
        }
    }
    if (used == 0) {
        throw ValidationError(std::string(op) + ": tensors have zero energy");
    }
    for (double& v : sum) {
        v /= static_cast<double>(used);
    }
    return sum;
}

Histogram phase_histogram(const IQTensor& a, const IQTensor& b)
{
    Histogram h;
    const double width = 2.0 * kPi / static_cast<double>(kPhaseBins);
    for (std::size_t i = 0; i <= kPhaseBins; ++i) {
        h.edges.push_back(-kPi + width * static_cast<double>(i));
    }
    auto fill = [&](const IQTensor& t) {
        std::vector<double> counts(kPhaseBins, 0.0);
        for (const cplx& v : t.data()) {
            auto bin = static_cast<std::size_t>((std::arg(v) + kPi) / width);
            counts[std::min(bin, kPhaseBins - 1)] += 1.0;
        }
        for (double& c : counts) {
            c /= static_cast<double>(t.size()) * width;
        }
        return counts;
    };
    h.a = fill(a);
    h.b = fill(b);
    return h;
}

Cdf magnitude_cdf(const std::vector<double>& sa, const std::vector<double>& sb)
{
    Cdf c;
    const double lo = std::min(sa.front(), sb.front());
    const double hi = std::max(sa.back(), sb.back());
    for (std::size_t i = 0; i < kCdfPoints; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kCdfPoints - 1);
        c.x.push_back(x);
        c.a.push_back(static_cast<double>(std::upper_bound(sa.begin(), sa.end(), x) - sa.begin()) /
                      static_cast<double>(sa.size()));
        c.b.push_back(static_cast<double>(std::upper_bound(sb.begin(), sb.end(), x) - sb.begin()) /
                      static_cast<double>(sb.size()));
    }
    return c;
}

double ks_sorted(const std::vector<double>& a, const std::vector<double>& b)
{
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) {
            ++i;
        }
        while (j < b.size() && b[j] == x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

} // namespace

IQTensor power_normalize(const IQTensor& t)
{
    const double p = waveform::grid_power(t);
    if (!(p > 0.0)) {
        throw ValidationError("power_normalize: tensor has zero power");
    }
    IQTensor out = t;
    const double scale = 1.0 / std::sqrt(p);
    for (cplx& v : out.data()) {
        v *= scale;
    }
    return out;
}

double magnitude_variance(const IQTensor& t)
{
    if (t.empty()) {
        throw ValidationError("magnitude_variance: empty tensor");
    }
    double mean = 0.0;
    for (const cplx& v : t.data()) {
        mean += std::abs(v);
    }
    mean /= static_cast<double>(t.size());
    double var = 0.0;
    for (const cplx& v : t.data()) {
        const double d = std::abs(v) - mean;
        var += d * d;
    }
    return var / static_cast<double>(t.size());
}

std::vector<double> magnitudes(const IQTensor& t)
{
    std::vector<double> out;
    out.reserve(t.size());
    for (const cplx& v : t.data()) {
        out.push_back(std::abs(v));
    }
    return out;
}

std::vector<double> phases(const IQTensor& t)
{
    std::vector<double> out;
    out.reserve(t.size());
    for (const cplx& v : t.data()) {
        out.push_back(std::arg(v));
    }
    return out;
}

double kolmogorov_q(double lambda)
{
    if (!(lambda > 0.0)) {
        return 1.0;
    }
    double q = 0.0;
    if (lambda < 1.18) {
        // small-lambda form of the same distribution; the alternating series
        // converges slowly here
        const double c = kPi * kPi / (8.0 * lambda * lambda);
        double s = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double term = std::exp(-odd * odd * c);
            s += term;
            if (term < 1e-18 * s) {
                break;
            }
        }
        q = 1.0 - std::sqrt(2.0 * kPi) / lambda * s;
    } else {
        double sign = 1.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            q += sign * term;
            if (term < 1e-18) {
                break;
            }
            sign = -sign;
        }
        q *= 2.0;
    }
    return std::clamp(q, 0.0, 1.0);
}

double ks_p_value(double d, std::size_t na, std::size_t nb)
{
    if (na == 0 || nb == 0) {
        throw ValidationError("ks_p_value: empty sample");
    }
    if (d <= 0.0) {
        return 1.0;
    }
    const double ne = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(na + nb);
    const double root = std::sqrt(ne);
    return kolmogorov_q((root + 0.12 + 0.11 / root) * d);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b)
{
    require_non_empty(a, b, "ks_two_sample");
    KsResult r;
    r.d = ks_sorted(sorted_copy(a), sorted_copy(b));
    r.p = ks_p_value(r.d, a.size(), b.size());
    return r;
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b)
{
    require_non_empty(a, b, "wasserstein_1d");
    const auto sa = sorted_copy(a);
    const auto sb = sorted_copy(b);
    if (sa.size() == sb.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < sa.size(); ++i) {
            acc += std::abs(sa[i] - sb[i]);
        }
        return acc / static_cast<double>(sa.size());
    }
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double prev = std::min(sa.front(), sb.front());
    double area = 0.0;
    while (i < sa.size() || j < sb.size()) {
        double x = 0.0;
        if (i == sa.size()) {
            x = sb[j];
        } else if (j == sb.size()) {
            x = sa[i];
        } else {
            x = std::min(sa[i], sb[j]);
        }
        area += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (x - prev);
        while (i < sa.size() && sa[i] == x) {
            ++i;
        }
        while (j < sb.size() && sb[j] == x) {
            ++j;
        }
        prev = x;
    }
    return area;
}

std::vector<double> temporal_autocorrelation(const IQTensor& t, std::size_t max_lag)
{
    return correlate(t, t, max_lag, "temporal_autocorrelation");
}

std::vector<double> cross_correlation(const IQTensor& a, const IQTensor& b, std::size_t max_lag)
{
    return correlate(a, b, max_lag, "cross_correlation");
}

Matrix waterfall(const IQTensor& t)
{
    if (t.empty()) {
        throw ValidationError("waterfall: empty tensor");
    }
    Matrix m;
    m.rows = t.subcarriers();
    m.cols = t.snapshots();
    m.values.assign(m.rows * m.cols, kWaterfallFloorDb);
    const double inv_s = 1.0 / static_cast<double>(t.symbols());
    for (std::size_t n = 0; n < t.snapshots(); ++n) {
        for (std::size_t k = 0; k < t.subcarriers(); ++k) {
            double p = 0.0;
            for (std::size_t s = 0; s < t.symbols(); ++s) {
                p += std::norm(t(k, s, n));
            }
            p *= inv_s;
            if (p > 0.0) {
                m.values[k * m.cols + n] = std::max(kWaterfallFloorDb, 10.0 * std::log10(p));
            }
        }
    }
    return m;
}

std::string waterfall_csv(const Matrix& m)
{
    std::string out = "subcarrier";
    for (std::size_t n = 0; n < m.cols; ++n) {
        out += ",n" + std::to_string(n);
    }
    out += "\n";
    for (std::size_t k = 0; k < m.rows; ++k) {
        out += std::to_string(k);
        for (std::size_t n = 0; n < m.cols; ++n) {
            out += "," + channel::format_double(m.at(k, n));
        }
        out += "\n";
    }
    return out;
}

EnsembleStats ensemble_report(const IQTensor& a, const IQTensor& b, std::size_t max_lag)
{
    const IQTensor na = power_normalize(a);
    const IQTensor nb = power_normalize(b);
    EnsembleStats st;
    st.dims_a = dims_of(a);
    st.dims_b = dims_of(b);
    st.var_a = magnitude_variance(na);
    st.var_b = magnitude_variance(nb);
    const auto ma = sorted_copy(magnitudes(na));
    const auto mb = sorted_copy(magnitudes(nb));
    st.ks_d = ks_sorted(ma, mb);
    st.ks_p = ks_p_value(st.ks_d, ma.size(), mb.size());
    st.wasserstein = wasserstein_1d(ma, mb);
    st.magnitude_cdf = magnitude_cdf(ma, mb);
    st.phase_histogram = phase_histogram(na, nb);
    if (a.same_shape(b) && a.snapshots() >= 1) {
        st.max_lag = std::min(max_lag, a.snapshots() - 1);
        st.autocorr_a = temporal_autocorrelation(na, st.max_lag);
        st.autocorr_b = temporal_autocorrelation(nb, st.max_lag);
        st.crosscorr = cross_correlation(na, nb, st.max_lag);
    }
    return st;
}

nlohmann::json to_json(const EnsembleStats& s)
{
    return {
        {"format_version", kStatsFormatVersion},
        {"dims_a", s.dims_a},
        {"dims_b", s.dims_b},
        {"var_a", s.var_a},
        {"var_b", s.var_b},
        {"ks_d", s.ks_d},
        {"ks_p", s.ks_p},
        {"wasserstein", s.wasserstein},
        {"max_lag", s.max_lag},
        {"autocorr_a", s.autocorr_a},
        {"autocorr_b", s.autocorr_b},
        {"crosscorr", s.crosscorr},
        {"phase_histogram", {{"edges", s.phase_histogram.edges}, {"a", s.phase_histogram.a}, {"b", s.phase_histogram.b}}},
        {"magnitude_cdf", {{"x", s.magnitude_cdf.x}, {"a", s.magnitude_cdf.a}, {"b", s.magnitude_cdf.b}}},
    };
}

} // namespace nextsense::validation
