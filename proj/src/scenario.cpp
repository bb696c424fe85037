// SPDX-License-Identifier: Apache-2.0

#include "nextsense/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nextsense/rng.hpp"

namespace nextsense::scenario {

namespace {

constexpr double kDegToRad = kPi / 180.0;

std::string vec_string(const Vec3& v)
{
    std::ostringstream out;
    out << "(" << v[0] << ", " << v[1] << ", " << v[2] << ")";
    return out.str();
}

bool all_finite(const Vec3& v)
{
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

bool is_lte_bandwidth(double mhz)
{
    for (double b : {1.4, 3.0, 5.0, 10.0, 15.0, 20.0}) {
        if (mhz == b) {
            return true;
        }
    }
    return false;
}

void validate_channel(const ChannelConfig& ch, const std::string& path, std::vector<Violation>& out)
{
    if (ch.preset == "custom") {
        if (ch.taps.empty()) {
            out.push_back({path + ".taps", "custom channel needs at least one tap"});
        }
        for (std::size_t i = 0; i < ch.taps.size(); ++i) {
            const auto& t = ch.taps[i];
            const std::string tp = path + ".taps[" + std::to_string(i) + "]";
            if (!(t.delay_ns >= 0.0) || !std::isfinite(t.delay_ns)) {
                out.push_back({tp + ".delay_ns", "must be finite and >= 0"});
            }
            if (!(t.doppler_hz >= 0.0) || !std::isfinite(t.doppler_hz)) {
                out.push_back({tp + ".doppler_hz", "must be finite and >= 0"});
            }
            if (!std::isfinite(t.power_db)) {
                out.push_back({tp + ".power_db", "must be finite"});
            }
        }
    } else {
        try {
            (void)channel::load_tdl_preset(ch.preset, ch.delay_spread_ns, 0.0);
        } catch (const ValidationError& e) {
            out.push_back({path + ".preset", e.what()});
        }
    }
    if (ch.delay_spread_ns && !(*ch.delay_spread_ns > 0.0 && std::isfinite(*ch.delay_spread_ns))) {
        out.push_back({path + ".delay_spread", "must be > 0 ns"});
    }
    if (!(ch.doppler_hz >= 0.0) || !std::isfinite(ch.doppler_hz)) {
        out.push_back({path + ".doppler", "must be finite and >= 0 Hz"});
    }
    if (ch.num_ports < 1 || ch.num_ports > 8) {
        out.push_back({path + ".num_ports", "must be in [1, 8]"});
    }
    if (std::isnan(ch.noise_spectral_density_dbm_hz) || ch.noise_spectral_density_dbm_hz > 0.0) {
        out.push_back({path + ".noise_spectral_density", "must be <= 0 dBm/Hz or null (disabled)"});
    }
    if (!std::isfinite(ch.path_loss_a_db)) {
        out.push_back({path + ".path_loss_a", "must be finite"});
    }
    if (!std::isfinite(ch.path_loss_b_db) || ch.path_loss_b_db < 0.0) {
        out.push_back({path + ".path_loss_b", "must be finite and >= 0 dB/decade"});
    }
}

void reflect_axis(double& p, double& v, double lo, double hi)
{
    const double length = hi - lo;
    if (length <= 0.0) {
        p = lo;
        return;
    }
    const double u = p - lo;
    const double crossings = std::floor(u / length);
    double r = u - crossings * length;
    r = std::clamp(r, 0.0, length);
    const bool odd = std::fmod(std::abs(crossings), 2.0) == 1.0;
    if (odd) {
        p = hi - r;
        v = -v;
    } else {
        p = lo + r;
    }
    p = std::clamp(p, lo, hi);
}

} // namespace

bool Box::contains(const Vec3& p) const
{
    for (int i = 0; i < 3; ++i) {
        if (!(p[i] >= min[i] && p[i] <= max[i])) {
            return false;
        }
    }
    return true;
}

ExperimentSpec default_spec()
{
    ExperimentSpec spec;
    spec.ues.push_back(UESpec{});
    return spec;
}

std::vector<Violation> validate_spec(const ExperimentSpec& spec)
{
    std::vector<Violation> out;
    const RadioConfig& r = spec.radio;

    if (spec.name.empty()) {
        out.push_back({"name", "must not be empty"});
    }
    if (r.num_cells < 1) {
        out.push_back({"radio.num_cells", "must be >= 1"});
    }
    if (!(r.carrier_frequency_mhz > 0.0 && r.carrier_frequency_mhz <= 100000.0)) {
        out.push_back({"radio.carrier_frequency", "must be in (0, 100000] MHz"});
    }
    if (r.rat == Rat::nr) {
        if (!(r.bandwidth_mhz > 0.0 && r.bandwidth_mhz <= 100.0)) {
            out.push_back({"radio.bandwidth", "NR bandwidth must be in (0, 100] MHz"});
        }
    } else if (!is_lte_bandwidth(r.bandwidth_mhz)) {
        out.push_back({"radio.bandwidth", "LTE bandwidth must be one of 1.4/3/5/10/15/20 MHz"});
    }
    if (!is_supported_subcarrier_spacing(r.subcarrier_spacing_khz)) {
        std::ostringstream reason;
        reason << "must be one of 15/30/60/120 kHz, got " << r.subcarrier_spacing_khz;
        out.push_back({"radio.subcarrier_spacing", reason.str()});
    }
    if (!(r.tx_power_dbm >= -40.0 && r.tx_power_dbm <= 50.0)) {
        out.push_back({"radio.tx_power", "must be within [-40, 50] dBm"});
    }
    if (r.num_dl_antennas < 1) {
        out.push_back({"radio.num_dl_antennas", "must be >= 1"});
    }
    if (r.num_ul_antennas < 1) {
        out.push_back({"radio.num_ul_antennas", "must be >= 1"});
    }
    if (r.max_mcs < 0 || r.max_mcs > 28) {
        out.push_back({"radio.max_mcs", "must be in [0, 28]"});
    }
    if (r.rx_tx_latency_slots < 0) {
        out.push_back({"radio.rx_tx_latency", "must be >= 0 slots"});
    }
    if (!all_finite(r.antenna_position)) {
        out.push_back({"radio.antenna_position", "must be finite"});
    }

    if (spec.capture.num_subcarriers < 2) {
        out.push_back({"capture.num_subcarriers", "must be >= 2"});
    }
    if (spec.capture.num_symbols < 1) {
        out.push_back({"capture.num_symbols", "must be >= 1"});
    }
    if (is_supported_subcarrier_spacing(r.subcarrier_spacing_khz) && r.bandwidth_mhz > 0.0 &&
        static_cast<double>(spec.capture.num_subcarriers) * r.subcarrier_spacing_khz > r.bandwidth_mhz * 1e3) {
        out.push_back({"capture.num_subcarriers", "capture grid is wider than the configured bandwidth"});
    }

    if (!(spec.duration_s > 0.0) || !std::isfinite(spec.duration_s)) {
        out.push_back({"duration", "must be > 0 s"});
    }
    if (!(spec.snapshot_interval_s > 0.0) || !std::isfinite(spec.snapshot_interval_s)) {
        out.push_back({"snapshot_interval", "must be > 0 s"});
    }
    if (spec.duration_s > 0.0 && spec.snapshot_interval_s > 0.0 &&
        spec.duration_s / spec.snapshot_interval_s < 1.0 - 1e-9) {
        out.push_back({"duration", "must cover at least one snapshot interval"});
    }

    if (spec.ues.empty()) {
        out.push_back({"ues", "at least one UE is required"});
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < spec.ues.size(); ++i) {
        const UESpec& ue = spec.ues[i];
        const std::string path = "ues[" + std::to_string(i) + "]";
        const std::string who = "UE '" + ue.id + "': ";
        if (ue.id.empty()) {
            out.push_back({path + ".id", "must not be empty"});
        } else if (!ids.insert(ue.id).second) {
            out.push_back({path + ".id", who + "duplicate id"});
        }
        bool area_ok = true;
        for (int a = 0; a < 3; ++a) {
            if (!(ue.mobility_area.min[a] <= ue.mobility_area.max[a])) {
                area_ok = false;
            }
        }
        if (!area_ok || !all_finite(ue.mobility_area.min) || !all_finite(ue.mobility_area.max)) {
            out.push_back({path + ".mobility_area", who + "min must be <= max on every axis"});
        } else if (!ue.mobility_area.contains(ue.initial_position)) {
            out.push_back({path + ".initial_position",
                           who + "initial position " + vec_string(ue.initial_position) + " is outside mobility area"});
        }
        if (!(ue.speed_mps >= 0.0) || !std::isfinite(ue.speed_mps)) {
            out.push_back({path + ".speed", who + "must be finite and >= 0 m/s"});
        }
        if (ue.mobility.kind == MobilityKind::fixed && ue.speed_mps != 0.0) {
            out.push_back({path + ".speed", who + "static mobility requires speed 0"});
        }
        if (!std::isfinite(ue.direction_deg) || !std::isfinite(ue.elevation_deg)) {
            out.push_back({path + ".direction", who + "angles must be finite"});
        }
        if (ue.mobility.kind == MobilityKind::waypoint) {
            if (ue.mobility.waypoints.empty()) {
                out.push_back({path + ".waypoints", who + "waypoint mobility needs at least one waypoint"});
            }
            for (std::size_t w = 0; w < ue.mobility.waypoints.size(); ++w) {
                if (!ue.mobility_area.contains(ue.mobility.waypoints[w])) {
                    out.push_back({path + ".waypoints[" + std::to_string(w) + "]", who + "outside mobility area"});
                }
            }
        }
        if (ue.traffic.kind == TrafficKind::cbr && !(ue.traffic.cbr_rate_kbps > 0.0)) {
            out.push_back({path + ".traffic_profile", who + "cbr rate must be > 0 kbps"});
        }
        validate_channel(ue.channel, path + ".channel", out);
    }
    return out;
}

std::size_t snapshot_count(double duration_s, double interval_s)
{
    if (!(duration_s > 0.0) || !(interval_s > 0.0)) {
        throw ValidationError("duration and snapshot interval must be > 0");
    }
    const double ratio = duration_s / interval_s;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

std::size_t snapshot_count(const ExperimentSpec& spec)
{
    return snapshot_count(spec.duration_s, spec.snapshot_interval_s);
}

GridDims grid_dims(const ExperimentSpec& spec)
{
    GridDims d;
    d.num_subcarriers = spec.capture.num_subcarriers;
    d.num_symbols = spec.capture.num_symbols;
    d.num_snapshots = snapshot_count(spec);
    d.subcarrier_spacing_khz = spec.radio.subcarrier_spacing_khz;
    return d;
}

// ---------------------------------------------------------------------------

Vec3 velocity_vector(double speed, double azimuth_deg, double elevation_deg)
{
    const double az = azimuth_deg * kDegToRad;
    const double el = elevation_deg * kDegToRad;
    return {speed * std::cos(el) * std::cos(az), speed * std::cos(el) * std::sin(az), speed * std::sin(el)};
}

MobilityState initial_state(const UESpec& ue)
{
    MobilityState st;
    st.position = ue.initial_position;
    st.speed = ue.mobility.kind == MobilityKind::fixed ? 0.0 : ue.speed_mps;
    if (ue.mobility.kind == MobilityKind::linear_bounce) {
        st.velocity = velocity_vector(ue.speed_mps, ue.direction_deg, ue.elevation_deg);
    } else if (ue.mobility.kind == MobilityKind::waypoint && !ue.mobility.waypoints.empty()) {
        Vec3 d{};
        for (int i = 0; i < 3; ++i) {
            d[i] = ue.mobility.waypoints[0][i] - st.position[i];
        }
        const double len = norm3(d);
        if (len > 0.0) {
            for (int i = 0; i < 3; ++i) {
                st.velocity[i] = st.speed * d[i] / len;
            }
        }
    }
    return st;
}

MobilityState step_mobility(const MobilityState& state, const MobilityLogic& logic, const Box& area, double dt)
{
    if (!(dt > 0.0)) {
        throw ValidationError("step_mobility: dt must be > 0");
    }
    MobilityState next = state;
    switch (logic.kind) {
    case MobilityKind::fixed:
        return next;
    case MobilityKind::linear_bounce:
        for (int i = 0; i < 3; ++i) {
            next.position[i] = state.position[i] + state.velocity[i] * dt;
            reflect_axis(next.position[i], next.velocity[i], area.min[i], area.max[i]);
        }
        return next;
    case MobilityKind::waypoint: {
        double remaining = state.speed * dt;
        while (remaining > 0.0 && next.next_waypoint < logic.waypoints.size()) {
            const Vec3& target = logic.waypoints[next.next_waypoint];
            Vec3 d{};
            for (int i = 0; i < 3; ++i) {
                d[i] = target[i] - next.position[i];
            }
            const double len = norm3(d);
            if (len <= remaining) {
                next.position = target;
                remaining -= len;
                ++next.next_waypoint;
            } else {
                for (int i = 0; i < 3; ++i) {
                    next.position[i] += d[i] / len * remaining;
                }
                remaining = 0.0;
            }
        }
        next.velocity = {0.0, 0.0, 0.0};
        if (next.next_waypoint < logic.waypoints.size()) {
            const Vec3& target = logic.waypoints[next.next_waypoint];
            Vec3 d{};
            for (int i = 0; i < 3; ++i) {
                d[i] = target[i] - next.position[i];
            }
            const double len = norm3(d);
            if (len > 0.0) {
                for (int i = 0; i < 3; ++i) {
                    next.velocity[i] = state.speed * d[i] / len;
                }
            }
        }
        for (int i = 0; i < 3; ++i) {
            next.position[i] = std::clamp(next.position[i], area.min[i], area.max[i]);
        }
        return next;
    }
    }
    return next;
}

std::vector<TrajectorySample> trajectory(const UESpec& ue, double duration_s, double dt)
{
    const std::size_t steps = snapshot_count(duration_s, dt);
    std::vector<TrajectorySample> out;
    out.reserve(steps + 1);
    MobilityState st = initial_state(ue);
    out.push_back({0.0, st.position, st.velocity});
    for (std::size_t i = 1; i <= steps; ++i) {
        st = step_mobility(st, ue.mobility, ue.mobility_area, dt);
        out.push_back({static_cast<double>(i) * dt, st.position, st.velocity});
    }
    return out;
}

double distance_to_antenna(const Vec3& position, const RadioConfig& radio)
{
    Vec3 d{};
    for (int i = 0; i < 3; ++i) {
        d[i] = position[i] - radio.antenna_position[i];
    }
    return std::max(kMinAntennaDistance, norm3(d));
}

double antenna_gain_db(const Vec3& position, const RadioConfig& radio)
{
    if (radio.antenna_type == AntennaType::isotropic) {
        return 0.0;
    }
    const double dx = position[0] - radio.antenna_position[0];
    const double dy = position[1] - radio.antenna_position[1];
    if (dx == 0.0 && dy == 0.0) {
        return 8.0;
    }
    double off = std::atan2(dy, dx) / kDegToRad - radio.antenna_azimuth_deg;
    off = std::remainder(off, 360.0);
    return 8.0 - std::min(12.0 * (off / 65.0) * (off / 65.0), 30.0);
}

channel::ChannelScenario build_channel(const ExperimentSpec& spec, std::size_t ue_index)
{
    const UESpec& ue = spec.ues.at(ue_index);
    const ChannelConfig& cfg = ue.channel;
    channel::ChannelScenario sc;
    if (cfg.preset == "custom") {
        sc.taps = cfg.taps;
        if (cfg.delay_spread_ns) {
            // custom tables given as normalized delays
            sc.taps = channel::load_custom_preset(cfg.taps, *cfg.delay_spread_ns);
        }
    } else {
        sc.taps = channel::load_tdl_preset(cfg.preset, cfg.delay_spread_ns, cfg.doppler_hz);
    }
    if (cfg.doppler_from_mobility) {
        for (auto& t : sc.taps) {
            t.doppler_from_mobility = true;
            t.doppler_hz = 0.0;
        }
    }
    sc.mimo_correlation = cfg.mimo_correlation;
    sc.num_ports = cfg.num_ports;
    sc.noise_spectral_density_dbm_hz = cfg.noise_spectral_density_dbm_hz;
    sc.path_loss_a_db = cfg.path_loss_a_db;
    sc.path_loss_b_db = cfg.path_loss_b_db;
    sc.seed = cfg.seed ? *cfg.seed : derive_seed(spec.seed, "ue-channel", ue_index);
    if (cfg.normalize_power) {
        sc = channel::normalized(std::move(sc));
    }
    return sc;
}

std::string_view to_string(MobilityKind k)
{
    switch (k) {
    case MobilityKind::fixed:
        return "static";
    case MobilityKind::linear_bounce:
        return "linear_bounce";
    case MobilityKind::waypoint:
        return "waypoint";
    }
    return "static";
}

std::string_view to_string(TrafficKind k)
{
    switch (k) {
    case TrafficKind::none:
        return "none";
    case TrafficKind::periodic_ssb_only:
        return "periodic_ssb_only";
    case TrafficKind::cbr:
        return "cbr";
    }
    return "none";
}

std::string_view to_string(Verbosity v)
{
    switch (v) {
    case Verbosity::off:
        return "off";
    case Verbosity::summary:
        return "summary";
    case Verbosity::full:
        return "full";
    }
    return "off";
}

std::string_view to_string(Rat r)
{
    return r == Rat::nr ? "nr" : "lte";
}

std::string_view to_string(AntennaType a)
{
    return a == AntennaType::isotropic ? "isotropic" : "sector";
}

} // namespace nextsense::scenario
