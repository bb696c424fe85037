// SPDX-License-Identifier: Apache-2.0
//
// Data-driven channel reconstruction: least-squares pilot division per
// snapshot, inverse DFT to the delay domain, power delay profile, delay
// spread, per-bin Doppler and dominant-tap selection into an emulator
// scenario.

#pragma once

#include <span>
#include <vector>

#include "nextsense/channel.hpp"
#include "nextsense/core.hpp"
#include "nextsense/waveform.hpp"

namespace nextsense::estimation {

/// H_hat(k, n), already reduced over the symbols of each snapshot.
struct FreqChannelEstimate {
    std::size_t num_subcarriers = 0;
    std::size_t num_snapshots = 0;
    double subcarrier_spacing_khz = 30.0;
    std::vector<cplx> values; // [n * K + k]

    cplx at(std::size_t k, std::size_t n) const { return values[n * num_subcarriers + k]; }
    std::span<const cplx> snapshot(std::size_t n) const
    {
        return std::span<const cplx>(values).subspan(n * num_subcarriers, num_subcarriers);
    }
};

/// h_hat(l, n): K delay bins per snapshot.
struct ImpulseResponse {
    std::size_t num_bins = 0;
    std::size_t num_snapshots = 0;
    double bin_duration_s = 0.0; // 1 / (K * df)
    std::vector<cplx> values;    // [n * L + l]

    cplx at(std::size_t l, std::size_t n) const { return values[n * num_bins + l]; }
    std::span<const cplx> snapshot(std::size_t n) const
    {
        return std::span<const cplx>(values).subspan(n * num_bins, num_bins);
    }
};

struct PowerDelayProfile {
    std::vector<double> power; // linear, per delay bin
    double bin_duration_s = 0.0;
};

struct TapSelectionPolicy {
    std::size_t max_taps = 12;
    double power_floor_db = -25.0; // relative to the strongest bin
};

/// Delay of a whole bin in ns. Use this when configuring on-grid taps so the
/// configured and recovered delays are the same double.
double bin_delay_ns(std::size_t bin, double bin_duration_s);

/// Bin duration 1 / (K * df) in seconds.
double bin_duration(std::size_t num_subcarriers, double subcarrier_spacing_khz);

/// H_hat(k, n) = mean over s of Y(k, s, n) / X(k, s).
FreqChannelEstimate estimate_freq_channel(const IQTensor& y, const waveform::ReferenceSignal& x);

/// Per snapshot inverse DFT across subcarriers (1/K scaled).
ImpulseResponse impulse_response(const FreqChannelEstimate& h_hat);

/// Forward DFT back to the subcarrier domain; inverts impulse_response.
FreqChannelEstimate to_frequency(const ImpulseResponse& h, double subcarrier_spacing_khz);

/// P(l) = mean over n of |h_hat(l, n)|^2.
PowerDelayProfile power_delay_profile(const ImpulseResponse& h);

/// RMS delay spread in seconds. Throws ValidationError on an all-zero PDP.
double rms_delay_spread(const PowerDelayProfile& pdp);

/// Dominant |Doppler| per delay bin from the DFT over snapshots.
/// Resolution is 1 / (N * interval). Needs at least 8 snapshots.
std::vector<double> doppler_profile(const ImpulseResponse& h, double snapshot_interval_s);

/// Same, checking that the snapshot times are uniformly spaced.
std::vector<double> doppler_profile(const ImpulseResponse& h, std::span<const double> snapshot_times);

/// Keeps the bins within policy.power_floor_db of the strongest (at most
/// policy.max_taps, strongest first, ties to the smaller delay) and returns
/// them as taps ordered by delay. doppler_hz may be empty (all zero).
std::vector<channel::Tap> select_dominant_taps(const PowerDelayProfile& pdp, std::span<const double> doppler_hz,
                                               const TapSelectionPolicy& policy = {});

/// Wraps recovered taps into a power-normalized scenario, inheriting the
/// remaining fields from base.
channel::ChannelScenario export_scenario(std::span<const channel::Tap> taps,
                                         const channel::ChannelScenario& base = {});

/// The whole reconstruction workflow on one capture.
struct Reconstruction {
    FreqChannelEstimate h_hat;
    ImpulseResponse impulse;
    PowerDelayProfile pdp;
    std::vector<double> doppler_hz;
    double rms_delay_spread_s = 0.0;
    std::vector<channel::Tap> taps;
    channel::ChannelScenario scenario;
};

/// snapshot_interval_s <= 0 or fewer than 8 snapshots skips Doppler
/// estimation (all taps get 0 Hz).
Reconstruction reconstruct(const IQTensor& y, const waveform::ReferenceSignal& x, double snapshot_interval_s,
                           const TapSelectionPolicy& policy = {}, const channel::ChannelScenario& base = {});

} // namespace nextsense::estimation
