// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "nextsense/scenario.hpp"
#include "nextsense/scenario_json.hpp"

using namespace nextsense;
using namespace nextsense::scenario;
using Catch::Approx;

namespace {

bool has_path(const std::vector<Violation>& v, const std::string& path)
{
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.path == path; });
}

UESpec moving_ue(MobilityKind kind, double speed)
{
    UESpec ue;
    ue.mobility.kind = kind;
    ue.speed_mps = speed;
    ue.initial_position = {0.0, 0.0, 1.5};
    ue.mobility_area = Box{{-10.0, -10.0, 0.0}, {10.0, 10.0, 3.0}};
    return ue;
}

} // namespace

TEST_CASE("default spec is valid")
{
    const auto spec = default_spec();
    REQUIRE(validate_spec(spec).empty());
    REQUIRE(spec.ues.size() == 1);
    REQUIRE(snapshot_count(spec) == 100);
    const auto d = grid_dims(spec);
    REQUIRE(d.num_subcarriers == 360);
    REQUIRE(d.num_symbols == 4);
    REQUIRE(d.num_snapshots == 100);
}

TEST_CASE("validation reports each violation with its path")
{
    auto spec = default_spec();
    spec.radio.subcarrier_spacing_khz = 25.0;
    spec.radio.max_mcs = 40;
    spec.duration_s = 0.0;
    spec.ues[0].initial_position = {500.0, 0.0, 1.0};
    spec.ues[0].channel.preset = "tdlq30";
    spec.ues.push_back(spec.ues[0]);
    const auto v = validate_spec(spec);
    REQUIRE(has_path(v, "radio.subcarrier_spacing"));
    REQUIRE(has_path(v, "radio.max_mcs"));
    REQUIRE(has_path(v, "duration"));
    REQUIRE(has_path(v, "ues[0].initial_position"));
    REQUIRE(has_path(v, "ues[0].channel.preset"));
    REQUIRE(has_path(v, "ues[1].id")); // duplicate
    const auto it = std::find_if(v.begin(), v.end(), [](const Violation& x) { return x.path == "ues[0].initial_position"; });
    REQUIRE(it->reason.find("ue0") != std::string::npos);
    REQUIRE(it->reason.find("outside mobility area") != std::string::npos);
}

TEST_CASE("validation of individual fields")
{
    auto spec = default_spec();
    spec.ues[0].channel.delay_spread_ns = 0.0;
    REQUIRE(has_path(validate_spec(spec), "ues[0].channel.delay_spread"));

    spec = default_spec();
    spec.ues[0].speed_mps = 3.0; // static logic
    REQUIRE(has_path(validate_spec(spec), "ues[0].speed"));

    spec = default_spec();
    spec.ues[0].mobility.kind = MobilityKind::waypoint;
    REQUIRE(has_path(validate_spec(spec), "ues[0].waypoints"));

    spec = default_spec();
    spec.ues[0].traffic.kind = TrafficKind::cbr;
    REQUIRE(has_path(validate_spec(spec), "ues[0].traffic_profile"));

    spec = default_spec();
    spec.radio.rat = Rat::lte;
    spec.radio.bandwidth_mhz = 100.0;
    REQUIRE(has_path(validate_spec(spec), "radio.bandwidth"));
    spec.radio.bandwidth_mhz = 20.0;
    spec.capture.num_subcarriers = 700;
    REQUIRE(has_path(validate_spec(spec), "capture.num_subcarriers"));
    spec.capture.num_subcarriers = 300;
    REQUIRE(validate_spec(spec).empty());

    spec = default_spec();
    spec.ues[0].channel.preset = "custom";
    REQUIRE(has_path(validate_spec(spec), "ues[0].channel.taps"));
    spec.ues[0].channel.taps = {{0.0, 0.0, -1.0}};
    REQUIRE(has_path(validate_spec(spec), "ues[0].channel.taps[0].doppler_hz"));

    spec = default_spec();
    spec.ues.clear();
    REQUIRE(has_path(validate_spec(spec), "ues"));
}

TEST_CASE("snapshot count is ceil of duration over interval")
{
    REQUIRE(snapshot_count(1.0, 0.01) == 100);
    REQUIRE(snapshot_count(0.3, 0.1) == 3); // 2.9999999999999996 in binary
    REQUIRE(snapshot_count(1.05, 0.1) == 11);
    REQUIRE(snapshot_count(0.01, 0.01) == 1);
    REQUIRE_THROWS_AS(snapshot_count(0.0, 0.01), ValidationError);
}

TEST_CASE("velocity vector")
{
    const auto v = velocity_vector(2.0, 90.0, 0.0);
    REQUIRE(v[0] == Approx(0.0).margin(1e-15));
    REQUIRE(v[1] == Approx(2.0));
    const auto up = velocity_vector(1.0, 0.0, 90.0);
    REQUIRE(up[2] == Approx(1.0));
    REQUIRE(norm3(velocity_vector(3.0, 37.0, 12.0)) == Approx(3.0).epsilon(1e-14));
}

TEST_CASE("static UE never moves")
{
    const auto traj = trajectory(UESpec{}, 1.0, 0.1);
    REQUIRE(traj.size() == 11);
    for (const auto& s : traj) {
        REQUIRE(s.position == UESpec{}.initial_position);
        REQUIRE(s.velocity == Vec3{0.0, 0.0, 0.0});
    }
    REQUIRE(traj.back().time_s == Approx(1.0));
}

TEST_CASE("linear bounce reflects at the area boundary")
{
    auto ue = moving_ue(MobilityKind::linear_bounce, 4.0);
    // 4 m/s along +x from 0: hits x = 10 at t = 2.5 s, back at 0 at t = 5 s,
    // at x = -10 at t = 7.5 s
    const auto traj = trajectory(ue, 10.0, 0.5);
    REQUIRE(traj.size() == 21);
    auto oracle = [](double t) {
        // triangle wave of amplitude 10 and period 10 s starting upward at 0
        const double u = std::fmod(t + 2.5, 10.0);
        return u < 5.0 ? -10.0 + 4.0 * u : 10.0 - 4.0 * (u - 5.0);
    };
    for (const auto& s : traj) {
        INFO("t = " << s.time_s);
        REQUIRE(s.position[0] == Approx(oracle(s.time_s)).margin(1e-9));
        REQUIRE(ue.mobility_area.contains(s.position));
        REQUIRE(norm3(s.velocity) == Approx(4.0));
    }
    REQUIRE(traj[6].velocity[0] < 0.0);  // t = 3
    REQUIRE(traj[16].velocity[0] > 0.0); // t = 8
}

TEST_CASE("bounce stays inside for steps longer than the box")
{
    auto ue = moving_ue(MobilityKind::linear_bounce, 97.0);
    ue.direction_deg = 33.0;
    ue.elevation_deg = 10.0;
    for (const auto& s : trajectory(ue, 5.0, 0.37)) {
        REQUIRE(ue.mobility_area.contains(s.position));
    }
}

TEST_CASE("waypoint mobility follows the path and stops")
{
    auto ue = moving_ue(MobilityKind::waypoint, 2.0);
    ue.mobility.waypoints = {{4.0, 0.0, 1.5}, {4.0, 3.0, 1.5}};
    const auto traj = trajectory(ue, 5.0, 1.0);
    REQUIRE(traj[1].position[0] == Approx(2.0));
    REQUIRE(traj[2].position[0] == Approx(4.0));
    REQUIRE(traj[3].position[1] == Approx(2.0)); // corner turned within one step
    REQUIRE(traj[3].position[0] == Approx(4.0));
    REQUIRE(traj[4].position == Vec3{4.0, 3.0, 1.5});
    REQUIRE(traj[5].position == Vec3{4.0, 3.0, 1.5});
    REQUIRE(traj[5].velocity == Vec3{0.0, 0.0, 0.0});
}

TEST_CASE("trajectory is deterministic")
{
    auto ue = moving_ue(MobilityKind::linear_bounce, 7.0);
    ue.direction_deg = 71.0;
    REQUIRE(trajectory(ue, 3.0, 0.01) == trajectory(ue, 3.0, 0.01));
    REQUIRE_THROWS_AS(step_mobility(initial_state(ue), ue.mobility, ue.mobility_area, 0.0), ValidationError);
}

TEST_CASE("distance and antenna gain")
{
    RadioConfig r;
    r.antenna_position = {0.0, 0.0, 10.0};
    REQUIRE(distance_to_antenna({3.0, 4.0, 10.0}, r) == Approx(5.0));
    REQUIRE(distance_to_antenna({0.0, 0.0, 10.0}, r) == kMinAntennaDistance);
    REQUIRE(antenna_gain_db({50.0, 20.0, 1.0}, r) == 0.0);
    r.antenna_type = AntennaType::sector;
    r.antenna_azimuth_deg = 0.0;
    const double front = antenna_gain_db({100.0, 0.0, 1.5}, r);
    const double side = antenna_gain_db({0.0, 100.0, 1.5}, r);
    const double back = antenna_gain_db({-100.0, 0.0, 1.5}, r);
    REQUIRE(front == Approx(8.0));
    REQUIRE(side < front);
    REQUIRE(back == Approx(-22.0));
}

TEST_CASE("build_channel honours preset, noise and seeds")
{
    auto spec = default_spec();
    spec.ues.push_back(spec.ues[0]);
    spec.ues[1].id = "ue1";
    const auto a = build_channel(spec, 0);
    const auto b = build_channel(spec, 1);
    REQUIRE(a.taps.size() == 23);
    REQUIRE(a.seed != b.seed);
    REQUIRE(a.noise_spectral_density_dbm_hz == -174.0);
    double sum = 0.0;
    for (const auto& t : a.taps) {
        sum += std::pow(10.0, t.power_db / 10.0);
    }
    REQUIRE(sum == Approx(1.0).epsilon(1e-12));

    spec.ues[0].channel.doppler_from_mobility = true;
    spec.ues[0].channel.seed = 99;
    const auto c = build_channel(spec, 0);
    REQUIRE(c.seed == 99);
    REQUIRE(std::all_of(c.taps.begin(), c.taps.end(), [](const auto& t) { return t.doppler_from_mobility; }));

    spec.ues[0].channel.preset = "custom";
    spec.ues[0].channel.taps = {{0.0, 0.0, 0.0}, {2.0, -3.0, 0.0}};
    spec.ues[0].channel.delay_spread_ns = 50.0;
    REQUIRE(build_channel(spec, 0).taps[1].delay_ns == 100.0);
    REQUIRE_THROWS(build_channel(spec, 5));
}

// ---------------------------------------------------------------------------
// JSON

TEST_CASE("spec JSON round trips")
{
    auto spec = default_spec();
    spec.name = "round trip";
    spec.radio.antenna_type = AntennaType::sector;
    spec.radio.antenna_azimuth_deg = 45.0;
    spec.ues[0].mobility.kind = MobilityKind::waypoint;
    spec.ues[0].speed_mps = 1.25;
    spec.ues[0].mobility.waypoints = {{1.0, 2.0, 1.5}};
    spec.ues[0].traffic = {TrafficKind::cbr, 512.0};
    spec.ues[0].channel.preset = "custom";
    spec.ues[0].channel.taps = {{0.0, 0.0, 0.0}, {33.3, -3.0, 0.0, true}};
    spec.ues[0].channel.noise_spectral_density_dbm_hz = channel::kNoiseDisabled;
    spec.ues[0].channel.seed = 12345678901234ULL;
    spec.ues[0].channel.mimo_correlation = channel::MimoCorrelation::high;
    spec.log_verbosity.phy = Verbosity::full;
    spec.log_verbosity.nas = Verbosity::off;
    spec.capture = {120, 2, 99};
    REQUIRE(validate_spec(spec).empty());

    const auto text = dump_spec(spec);
    const auto back = parse_spec(text);
    REQUIRE(back == spec);
    REQUIRE(dump_spec(back) == text);
    const auto j = nlohmann::json::parse(text);
    REQUIRE(j["ues"][0]["channel"]["noise_spectral_density"].is_null());
    REQUIRE(j["ues"][0]["channel"]["taps"][1]["doppler_hz"] == "from-mobility");
    REQUIRE(j["format_version"] == kSpecFormatVersion);
}

TEST_CASE("missing fields take defaults")
{
    const auto spec = parse_spec(R"({"ues": [{"id": "a"}]})");
    REQUIRE(spec.ues[0].id == "a");
    REQUIRE(spec.radio == RadioConfig{});
    REQUIRE(spec.ues[0].channel == ChannelConfig{});
    REQUIRE(spec.duration_s == 1.0);
}

TEST_CASE("parse errors name the offending field")
{
    auto message = [](const std::string& text) {
        try {
            (void)parse_spec(text);
        } catch (const SpecParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    REQUIRE(message(R"({"radio": {"subcarrier_spacing": "thirty"}})").find("radio.subcarrier_spacing") !=
            std::string::npos);
    REQUIRE(message(R"({"ues": [{"mobility_logic": "teleport"}]})").find("ues[0].mobility_logic") !=
            std::string::npos);
    REQUIRE(message(R"({"ues": [{"channel": {"taps": [{"delay_ns": 1, "power_db": 0, "doppler_hz": "x"}]}}]})")
                .find("ues[0].channel.taps[0].doppler_hz") != std::string::npos);
    REQUIRE(message(R"({"format_version": 7})").find("format_version") != std::string::npos);
    REQUIRE(message("[1, 2]") != "no error");
    REQUIRE(message("{not json") != "no error");
}

TEST_CASE("violations serialize as path and reason")
{
    const std::vector<Violation> v{{"radio.max_mcs", "must be in [0, 28]"}};
    const auto j = to_json(v);
    REQUIRE(j.is_array());
    REQUIRE(j[0]["path"] == "radio.max_mcs");
    REQUIRE(j[0]["reason"] == "must be in [0, 28]");
}

TEST_CASE("trajectory preview document")
{
    auto spec = default_spec();
    spec.duration_s = 0.05;
    const auto j = preview_json(spec);
    REQUIRE(j["ues"].size() == 1);
    REQUIRE(j["ues"][0]["samples"].size() == 6);
    REQUIRE(j["ues"][0]["samples"][0]["t"] == 0.0);
    REQUIRE(j["ues"][0]["mobility_logic"] == "static");
}
