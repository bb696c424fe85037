// SPDX-License-Identifier: Apache-2.0
//
// Tapped-delay-line channel emulator.
//
// A scenario is a list of taps {delay, power, Doppler}. Each tap with a
// non-zero Doppler carries an independent Rayleigh fading gain synthesised by
// a sum of sinusoids with a classical (Jakes) Doppler spectrum; taps with
// zero Doppler are static and have gain exactly 1. The frequency response on
// subcarrier k is
//
//     H(k) = sum_l g_l * sqrt(P_l) * exp(-j 2 pi k df tau_l)
//
// and the received grid is Y(k, s, n) = H_n(k) X(k, s) + w(k, s, n), with w
// circular complex Gaussian of variance N0 * df (the transmit grid is the
// 0 dBm reference).

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nextsense/core.hpp"
#include "nextsense/rng.hpp"
#include "nextsense/waveform.hpp"

namespace nextsense::channel {

struct Tap {
    double delay_ns = 0.0;
    double power_db = 0.0;
    double doppler_hz = 0.0;
    /// When set, doppler_hz is filled at run time from UE speed and carrier.
    bool doppler_from_mobility = false;

    bool is_static() const { return doppler_hz == 0.0 && !doppler_from_mobility; }

    bool operator==(const Tap&) const = default;
};

enum class MimoCorrelation { low, medium, high };

std::string_view to_string(MimoCorrelation c);
MimoCorrelation parse_mimo_correlation(std::string_view s);

/// Correlation coefficient between adjacent-extreme ports for each level.
double correlation_alpha(MimoCorrelation c);

inline constexpr double kNoiseDisabled = -std::numeric_limits<double>::infinity();

struct ChannelScenario {
    std::vector<Tap> taps;
    MimoCorrelation mimo_correlation = MimoCorrelation::low;
    std::size_t num_ports = 1;
    /// dBm/Hz; -inf disables the noise source.
    double noise_spectral_density_dbm_hz = kNoiseDisabled;
    double path_loss_a_db = 0.0;
    double path_loss_b_db = 0.0;
    std::uint64_t seed = 0;
    bool normalize_power = false;

    bool noise_enabled() const { return noise_spectral_density_dbm_hz != kNoiseDisabled; }

    /// Throws ValidationError when an invariant does not hold.
    void validate() const;

    bool operator==(const ChannelScenario&) const = default;
};

/// Rescales tap powers so their linear sum is 1.
std::vector<Tap> normalize_tap_powers(std::vector<Tap> taps);

/// Returns a copy with normalize_power set and powers rescaled.
ChannelScenario normalized(ChannelScenario scenario);

// ---------------------------------------------------------------------------
// TDL presets

enum class TdlProfile { tdla, tdlb, tdlc, custom };

/// Normalized tap table (delays in units of the delay spread) for a profile.
/// The tables are shipped as data files and embedded at build time.
const std::vector<Tap>& tdl_table(TdlProfile profile);

/// Loads a named preset. Accepted names: "tdla30", "tdlb100", "tdlc300", any
/// "tdl{a,b,c}<ns>" and the bare "tdla"/"tdlb"/"tdlc" (which require an
/// explicit delay spread). The delay spread encoded in the name is the
/// default and can be overridden. Every tap gets doppler_hz.
std::vector<Tap> load_tdl_preset(std::string_view name, std::optional<double> delay_spread_ns = std::nullopt,
                                 double doppler_hz = 0.0);

/// Scales a caller-supplied normalized tap table by a delay spread.
std::vector<Tap> load_custom_preset(std::span<const Tap> normalized_table, double delay_spread_ns);

// ---------------------------------------------------------------------------
// Fading

/// Per-tap, per-port sum-of-sinusoids Rayleigh fading generator.
///
/// Each branch uses kSinusoids sinusoids for the in-phase and quadrature
/// parts, i.e. 4 * kSinusoids equally spaced arrival angles with a random
/// rotation. The state is the accumulated Doppler phase of every tap, so
/// the Doppler may change between steps (mobility) without phase jumps.
/// Single writer: advance in time order only.
class FadingProcess {
public:
    static constexpr std::size_t kSinusoids = 32;

    FadingProcess(std::span<const Tap> taps, std::uint64_t seed, std::size_t num_ports = 1,
                  MimoCorrelation correlation = MimoCorrelation::low);

    std::size_t num_taps() const { return taps_.size(); }
    std::size_t num_ports() const { return ports_; }
    double time() const { return time_; }

    /// Moves the process forward by dt seconds at the current Doppler values.
    void advance(double dt);

    /// Replaces the Doppler of every from-mobility tap.
    void set_mobility_doppler(double hz);
    double doppler(std::size_t tap) const { return taps_[tap].doppler_hz; }

    cplx gain(std::size_t tap, std::size_t port = 0) const;
    std::vector<cplx> gains(std::size_t port = 0) const;

private:
    struct Branch {
        std::array<double, kSinusoids> cos_angle{};
        std::array<double, kSinusoids> sin_angle{};
        std::array<double, kSinusoids> phase_i{};
        std::array<double, kSinusoids> phase_q{};
    };

    cplx branch_gain(const Branch& b, double doppler_phase) const;

    std::vector<Tap> taps_;
    std::size_t ports_ = 1;
    std::vector<double> doppler_phase_; // 2 pi * integral of f_D dt, per tap
    std::vector<Branch> branches_;      // [tap * ports + port]
    std::vector<double> coloring_;      // lower Cholesky factor, ports x ports
    double time_ = 0.0;
};

// ---------------------------------------------------------------------------
// Emulation

/// H(k) for k = 0..K-1 given one complex fading gain per tap.
std::vector<cplx> frequency_response(const ChannelScenario& scenario, std::span<const cplx> fading_gains,
                                     const GridDims& dims);

/// Stateful emulator for one run. Snapshots must be applied in time order.
class ChannelEmulator {
public:
    ChannelEmulator(ChannelScenario scenario, std::size_t num_subcarriers, std::size_t num_symbols,
                    double subcarrier_spacing_khz);

    const ChannelScenario& scenario() const { return scenario_; }
    const FadingProcess& fading() const { return fading_; }

    void set_mobility_doppler(double hz) { fading_.set_mobility_doppler(hz); }

    /// Per-RE noise variance in mW (0 when noise is disabled).
    double noise_variance() const { return noise_variance_; }

    /// Advances fading to time_s, writes Y for every port into port_blocks
    /// (each K*S, symbol-major) and returns the noiseless H(k) of every port,
    /// including the large-scale gain.
    std::vector<std::vector<cplx>> apply_snapshot(const waveform::ReferenceSignal& x, double time_s,
                                                  double large_scale_gain_db,
                                                  std::span<const std::span<cplx>> port_blocks);

    /// Single-port convenience.
    std::vector<cplx> apply_snapshot(const waveform::ReferenceSignal& x, double time_s, double large_scale_gain_db,
                                     std::span<cplx> block);

private:
    ChannelScenario scenario_;
    std::size_t k_;
    std::size_t s_;
    double df_hz_;
    FadingProcess fading_;
    std::vector<cplx> steering_; // [tap * K + k]
    std::vector<double> amplitude_;
    double noise_variance_ = 0.0;
    RandomSource noise_;
    bool started_ = false;
};

/// Runs a whole capture: Y(k, s, n) for every snapshot time. Deterministic in
/// scenario.seed.
IQTensor apply_channel(const waveform::ReferenceSignal& x, const ChannelScenario& scenario,
                       std::span<const double> snapshot_times);

/// Multi-port variant; one tensor per receive port.
std::vector<IQTensor> apply_channel_ports(const waveform::ReferenceSignal& x, const ChannelScenario& scenario,
                                          std::span<const double> snapshot_times);

/// Uniform snapshot times interval, 2*interval, ... (n snapshots).
std::vector<double> uniform_times(std::size_t n, double interval, double start = 0.0);

double path_loss_db(double a_db, double b_db_per_decade, double distance_m);

/// Zeroth-order Bessel function of the first kind.
double bessel_j0(double x);

/// Classical Doppler autocorrelation J0(2 pi f_D lag).
double fading_autocorrelation_oracle(double doppler_hz, double lag_s);

// ---------------------------------------------------------------------------
// Tap-file format: one tap per line, "delay_ns power_db doppler_hz",
// whitespace separated, '#' starts a comment line. The Doppler column may
// be the literal "from-mobility".

std::vector<Tap> parse_tap_file(std::string_view text, std::string_view source = "<memory>");
std::string format_tap_file(std::span<const Tap> taps, std::string_view comment = {});
std::vector<Tap> read_tap_file(const std::filesystem::path& path);
void write_tap_file(const std::filesystem::path& path, std::span<const Tap> taps, std::string_view comment = {});

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

} // namespace nextsense::channel
