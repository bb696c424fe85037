// SPDX-License-Identifier: Apache-2.0
//
// Experiment input space (radio, channel, mobility, traffic, logging), its
// validation, and the UE mobility engine.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nextsense/channel.hpp"
#include "nextsense/core.hpp"

namespace nextsense::scenario {

enum class Rat { nr, lte };
enum class AntennaType { isotropic, sector };

struct RadioConfig {
    Rat rat = Rat::nr;
    int num_cells = 1;
    double carrier_frequency_mhz = 3500.0;
    double bandwidth_mhz = 100.0;
    double subcarrier_spacing_khz = 30.0;
    double tx_power_dbm = 10.0; // per resource element
    int num_dl_antennas = 1;
    int num_ul_antennas = 1;
    int max_mcs = 28;
    int rx_tx_latency_slots = 4; // carried as metadata only
    Vec3 antenna_position{0.0, 0.0, 10.0};
    AntennaType antenna_type = AntennaType::isotropic;
    double antenna_azimuth_deg = 0.0; // sector boresight

    bool operator==(const RadioConfig&) const = default;
};

struct Box {
    Vec3 min{-50.0, -50.0, 0.0};
    Vec3 max{50.0, 50.0, 3.0};

    bool contains(const Vec3& p) const;
    bool operator==(const Box&) const = default;
};

enum class MobilityKind { fixed, linear_bounce, waypoint };

struct MobilityLogic {
    MobilityKind kind = MobilityKind::fixed;
    std::vector<Vec3> waypoints; // waypoint logic only

    bool operator==(const MobilityLogic&) const = default;
};

enum class TrafficKind { none, periodic_ssb_only, cbr };

struct TrafficProfile {
    TrafficKind kind = TrafficKind::periodic_ssb_only;
    double cbr_rate_kbps = 0.0;

    bool operator==(const TrafficProfile&) const = default;
};

/// How a UE's channel is built: a named TDL preset or an explicit tap list.
struct ChannelConfig {
    std::string preset = "tdla30"; // tdl{a,b,c}<ns> or "custom"
    std::optional<double> delay_spread_ns;
    double doppler_hz = 0.0;
    bool doppler_from_mobility = false;
    std::vector<channel::Tap> taps; // preset == "custom": absolute taps
    channel::MimoCorrelation mimo_correlation = channel::MimoCorrelation::low;
    std::size_t num_ports = 1;
    double noise_spectral_density_dbm_hz = -174.0; // kNoiseDisabled disables
    double path_loss_a_db = 38.9;
    double path_loss_b_db = 22.0;
    bool normalize_power = true;
    std::optional<std::uint64_t> seed; // default: derived from the spec seed

    bool operator==(const ChannelConfig&) const = default;
};

struct UESpec {
    std::string id = "ue0";
    Vec3 initial_position{10.0, 0.0, 1.5};
    double speed_mps = 0.0;
    double direction_deg = 0.0; // azimuth, counter-clockwise from +x
    double elevation_deg = 0.0;
    Box mobility_area;
    MobilityLogic mobility;
    TrafficProfile traffic;
    ChannelConfig channel;

    bool operator==(const UESpec&) const = default;
};

enum class Verbosity { off, summary, full };

struct LogVerbosity {
    Verbosity phy = Verbosity::summary;
    Verbosity mac = Verbosity::summary;
    Verbosity rrc = Verbosity::summary;
    Verbosity nas = Verbosity::summary;

    bool operator==(const LogVerbosity&) const = default;
};

/// Shape and pilot seed of the captured reference grid.
struct CaptureConfig {
    std::size_t num_subcarriers = 360;
    std::size_t num_symbols = 4;
    std::uint64_t reference_seed = 7;

    bool operator==(const CaptureConfig&) const = default;
};

struct ExperimentSpec {
    std::string name = "default";
    RadioConfig radio;
    std::vector<UESpec> ues;
    double duration_s = 1.0;
    double snapshot_interval_s = 0.01;
    LogVerbosity log_verbosity;
    CaptureConfig capture;
    std::uint64_t seed = 1;

    bool operator==(const ExperimentSpec&) const = default;
};

/// One cell, one static UE on tdla30. Always valid.
ExperimentSpec default_spec();

struct Violation {
    std::string path;
    std::string reason;

    bool operator==(const Violation&) const = default;
};

/// Every violated invariant with its field path. Empty means valid.
std::vector<Violation> validate_spec(const ExperimentSpec& spec);

/// ceil(duration / interval), tolerant to rounding in the ratio.
std::size_t snapshot_count(double duration_s, double interval_s);
std::size_t snapshot_count(const ExperimentSpec& spec);

GridDims grid_dims(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Mobility

struct MobilityState {
    Vec3 position{};
    Vec3 velocity{};
    double speed = 0.0;
    std::size_t next_waypoint = 0;

    bool operator==(const MobilityState&) const = default;
};

/// speed * (cos el cos az, cos el sin az, sin el), angles in degrees.
Vec3 velocity_vector(double speed, double azimuth_deg, double elevation_deg);

MobilityState initial_state(const UESpec& ue);

/// fixed: unchanged. linear_bounce: constant velocity with specular
/// reflection at the box faces. waypoint: moves along the waypoint list at
/// constant speed and stops at the last one. The result lies inside area.
MobilityState step_mobility(const MobilityState& state, const MobilityLogic& logic, const Box& area, double dt);

struct TrajectorySample {
    double time_s = 0.0;
    Vec3 position{};
    Vec3 velocity{};

    bool operator==(const TrajectorySample&) const = default;
};

/// ceil(duration / dt) + 1 samples starting at t = 0, produced by iterating
/// step_mobility.
std::vector<TrajectorySample> trajectory(const UESpec& ue, double duration_s, double dt);

/// Euclidean distance to the gNB antenna, floored at 0.1 m.
double distance_to_antenna(const Vec3& position, const RadioConfig& radio);

inline constexpr double kMinAntennaDistance = 0.1;

/// Antenna gain towards a position: 0 dBi isotropic; sector follows a
/// parabolic horizontal pattern with 8 dBi peak and 30 dB front-to-back.
double antenna_gain_db(const Vec3& position, const RadioConfig& radio);

/// Builds the emulator scenario of one UE. Seeds default to a value derived
/// from the spec seed and the UE index.
channel::ChannelScenario build_channel(const ExperimentSpec& spec, std::size_t ue_index);

std::string_view to_string(MobilityKind k);
std::string_view to_string(TrafficKind k);
std::string_view to_string(Verbosity v);
std::string_view to_string(Rat r);
std::string_view to_string(AntennaType a);

} // namespace nextsense::scenario
