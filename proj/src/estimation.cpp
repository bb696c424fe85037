// SPDX-License-Identifier: Apache-2.0

#include "nextsense/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nextsense/dft.hpp"

namespace nextsense::estimation {

using channel::Tap;

double bin_delay_ns(std::size_t bin, double bin_duration_s)
{
    return static_cast<double>(bin) * bin_duration_s * 1e9;
}

double bin_duration(std::size_t num_subcarriers, double subcarrier_spacing_khz)
{
    return 1.0 / (static_cast<double>(num_subcarriers) * subcarrier_spacing_khz * 1e3);
}

FreqChannelEstimate estimate_freq_channel(const IQTensor& y, const waveform::ReferenceSignal& x)
{
    if (y.subcarriers() != x.num_subcarriers || y.symbols() != x.num_symbols) {
        throw ValidationError("estimate_freq_channel: received grid " + y.shape_string() + " does not match pilot " +
                              std::to_string(x.num_subcarriers) + "x" + std::to_string(x.num_symbols));
    }
    if (y.empty()) {
        throw ValidationError("estimate_freq_channel: empty received grid");
    }
    for (const cplx& v : x.values) {
        if (v == cplx{}) {
            throw ValidationError("estimate_freq_channel: pilot grid contains a zero");
        }
    }
    const std::size_t k_count = y.subcarriers();
    const std::size_t s_count = y.symbols();
    FreqChannelEstimate est;
    est.num_subcarriers = k_count;
    est.num_snapshots = y.snapshots();
    est.subcarrier_spacing_khz = x.subcarrier_spacing_khz;
    est.values.assign(k_count * y.snapshots(), cplx{});
    const double inv_s = 1.0 / static_cast<double>(s_count);
    for (std::size_t n = 0; n < y.snapshots(); ++n) {
        for (std::size_t k = 0; k < k_count; ++k) {
            cplx acc{};
            for (std::size_t s = 0; s < s_count; ++s) {
                acc += y(k, s, n) / x.at(k, s);
            }
            est.values[n * k_count + k] = s_count == 1 ? acc : acc * inv_s;
        }
    }
    return est;
}

ImpulseResponse impulse_response(const FreqChannelEstimate& h_hat)
{
    if (h_hat.num_subcarriers < 2) {
        throw ValidationError("impulse_response needs at least 2 subcarriers");
    }
    const std::size_t k_count = h_hat.num_subcarriers;
    ImpulseResponse h;
    h.num_bins = k_count;
    h.num_snapshots = h_hat.num_snapshots;
    h.bin_duration_s = bin_duration(k_count, h_hat.subcarrier_spacing_khz);
    h.values.resize(h_hat.values.size());
    dft::Plan plan(k_count, dft::Direction::inverse);
    for (std::size_t n = 0; n < h_hat.num_snapshots; ++n) {
        plan.execute(h_hat.snapshot(n), std::span<cplx>(h.values).subspan(n * k_count, k_count));
    }
    return h;
}

FreqChannelEstimate to_frequency(const ImpulseResponse& h, double subcarrier_spacing_khz)
{
    FreqChannelEstimate out;
    out.num_subcarriers = h.num_bins;
    out.num_snapshots = h.num_snapshots;
    out.subcarrier_spacing_khz = subcarrier_spacing_khz;
    out.values.resize(h.values.size());
    dft::Plan plan(h.num_bins, dft::Direction::forward);
    for (std::size_t n = 0; n < h.num_snapshots; ++n) {
        plan.execute(h.snapshot(n), std::span<cplx>(out.values).subspan(n * h.num_bins, h.num_bins));
    }
    return out;
}

PowerDelayProfile power_delay_profile(const ImpulseResponse& h)
{
    if (h.num_snapshots < 1) {
        throw ValidationError("power_delay_profile needs at least one snapshot");
    }
    PowerDelayProfile pdp;
    pdp.bin_duration_s = h.bin_duration_s;
    pdp.power.assign(h.num_bins, 0.0);
    for (std::size_t n = 0; n < h.num_snapshots; ++n) {
        const auto snap = h.snapshot(n);
        for (std::size_t l = 0; l < h.num_bins; ++l) {
            pdp.power[l] += std::norm(snap[l]);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(h.num_snapshots);
    for (double& p : pdp.power) {
        p *= inv_n;
    }
    return pdp;
}

double rms_delay_spread(const PowerDelayProfile& pdp)
{
    double total = 0.0;
    double first = 0.0;
    double second = 0.0;
    for (std::size_t l = 0; l < pdp.power.size(); ++l) {
        const double tau = static_cast<double>(l) * pdp.bin_duration_s;
        total += pdp.power[l];
        first += pdp.power[l] * tau;
        second += pdp.power[l] * tau * tau;
    }
    if (!(total > 0.0)) {
        throw ValidationError("rms_delay_spread: power delay profile is all zero");
    }
    const double mean = first / total;
    const double var = second / total - mean * mean;
    return std::sqrt(std::max(var, 0.0));
}

std::vector<double> doppler_profile(const ImpulseResponse& h, double snapshot_interval_s)
{
    if (h.num_snapshots < 8) {
        throw ValidationError("doppler_profile needs at least 8 snapshots");
    }
    if (!(snapshot_interval_s > 0.0)) {
        throw ValidationError("doppler_profile: snapshot interval must be > 0");
    }
    const std::size_t n_count = h.num_snapshots;
    const double resolution = 1.0 / (static_cast<double>(n_count) * snapshot_interval_s);
    dft::Plan plan(n_count, dft::Direction::forward);
    std::vector<cplx> series(n_count);
    std::vector<cplx> spectrum(n_count);
    std::vector<double> out(h.num_bins, 0.0);
    for (std::size_t l = 0; l < h.num_bins; ++l) {
        for (std::size_t n = 0; n < n_count; ++n) {
            series[n] = h.at(l, n);
        }
        plan.execute(series, spectrum);
        std::size_t peak = 0;
        double peak_mag = -1.0;
        for (std::size_t i = 0; i < n_count; ++i) {
            const double mag = std::abs(spectrum[i]);
            if (mag > peak_mag) {
                peak_mag = mag;
                peak = i;
            }
        }
        // fold the two-sided spectrum to |f|
        const double signed_index =
            peak <= n_count / 2 ? static_cast<double>(peak) : static_cast<double>(peak) - static_cast<double>(n_count);
        out[l] = std::abs(signed_index) * resolution;
    }
    return out;
}

std::vector<double> doppler_profile(const ImpulseResponse& h, std::span<const double> snapshot_times)
{
    if (snapshot_times.size() != h.num_snapshots) {
        throw ValidationError("doppler_profile: need one time per snapshot");
    }
    if (snapshot_times.size() < 2) {
        throw ValidationError("doppler_profile needs at least 8 snapshots");
    }
    const double interval = (snapshot_times.back() - snapshot_times.front()) /
                            static_cast<double>(snapshot_times.size() - 1);
    for (std::size_t i = 1; i < snapshot_times.size(); ++i) {
        const double d = snapshot_times[i] - snapshot_times[i - 1];
        if (std::abs(d - interval) > 1e-9 * std::max(1.0, std::abs(interval))) {
            throw ValidationError("doppler_profile: snapshot times are not uniformly spaced");
        }
    }
    return doppler_profile(h, interval);
}

std::vector<Tap> select_dominant_taps(const PowerDelayProfile& pdp, std::span<const double> doppler_hz,
                                      const TapSelectionPolicy& policy)
{
    if (pdp.power.empty()) {
        throw ValidationError("select_dominant_taps: empty power delay profile");
    }
    if (policy.max_taps < 1) {
        throw ValidationError("select_dominant_taps: max_taps must be >= 1");
    }
    if (!doppler_hz.empty() && doppler_hz.size() != pdp.power.size()) {
        throw ValidationError("select_dominant_taps: doppler profile length does not match the PDP");
    }
    std::vector<std::size_t> order(pdp.power.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pdp.power[a] > pdp.power[b]; });
    const double strongest = pdp.power[order.front()];
    if (!(strongest > 0.0)) {
        throw ValidationError("select_dominant_taps: power delay profile is all zero");
    }
    std::vector<Tap> taps;
    for (std::size_t idx : order) {
        if (taps.size() >= policy.max_taps) {
            break;
        }
        const double rel_db = 10.0 * std::log10(pdp.power[idx] / strongest);
        if (!(rel_db >= policy.power_floor_db)) {
            break;
        }
        Tap t;
        t.delay_ns = bin_delay_ns(idx, pdp.bin_duration_s);
        t.power_db = rel_db;
        t.doppler_hz = doppler_hz.empty() ? 0.0 : doppler_hz[idx];
        taps.push_back(t);
    }
    std::sort(taps.begin(), taps.end(), [](const Tap& a, const Tap& b) { return a.delay_ns < b.delay_ns; });
    return taps;
}

channel::ChannelScenario export_scenario(std::span<const Tap> taps, const channel::ChannelScenario& base)
{
    if (taps.empty()) {
        throw ValidationError("export_scenario: no taps to export");
    }
    channel::ChannelScenario scenario = base;
    scenario.taps.assign(taps.begin(), taps.end());
    scenario = channel::normalized(std::move(scenario));
    scenario.validate();
    return scenario;
}

Reconstruction reconstruct(const IQTensor& y, const waveform::ReferenceSignal& x, double snapshot_interval_s,
                           const TapSelectionPolicy& policy, const channel::ChannelScenario& base)
{
    Reconstruction r;
    r.h_hat = estimate_freq_channel(y, x);
    r.impulse = impulse_response(r.h_hat);
    r.pdp = power_delay_profile(r.impulse);
    r.rms_delay_spread_s = rms_delay_spread(r.pdp);
    if (snapshot_interval_s > 0.0 && r.impulse.num_snapshots >= 8) {
        r.doppler_hz = doppler_profile(r.impulse, snapshot_interval_s);
    }
    r.taps = select_dominant_taps(r.pdp, r.doppler_hz, policy);
    r.scenario = export_scenario(r.taps, base);
    return r;
}

} // namespace nextsense::estimation
