// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "../support.hpp"
#include "json.hpp"
#include "nextsense/channel.hpp"
#include "nextsense/digest.hpp"
#include "nextsense/runner.hpp"

using namespace nextsense;
using namespace nextsense::runner;
using Catch::Approx;

namespace {

scenario::ExperimentSpec small_spec()
{
    auto spec = scenario::default_spec();
    spec.name = "small";
    spec.duration_s = 0.1;
    spec.snapshot_interval_s = 0.01;
    spec.capture = {96, 2, 5};
    return spec;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

} // namespace

TEST_CASE("MCS thresholds follow the Shannon bound plus margin")
{
    const auto& table = mcs_table();
    REQUIRE(table.size() == 29);
    REQUIRE(table.front().mcs == 0);
    REQUIRE(table.back().mcs == 28);
    for (const auto& e : table) {
        REQUIRE(e.snr_threshold_db ==
                Approx(10.0 * std::log10(std::pow(2.0, e.spectral_efficiency) - 1.0) + 1.5).epsilon(1e-12));
        // SE = Qm * R / 1024, to the 4 decimals of the table
        REQUIRE(e.spectral_efficiency == Approx(e.modulation_order * e.code_rate_x1024 / 1024.0).margin(6e-5));
    }
    // increasing within a modulation order; the table dips slightly at the
    // 16QAM to 64QAM switch (MCS 16 to 17)
    for (std::size_t i = 1; i < table.size(); ++i) {
        if (table[i].modulation_order == table[i - 1].modulation_order) {
            REQUIRE(table[i].snr_threshold_db > table[i - 1].snr_threshold_db);
        }
    }
}

TEST_CASE("MCS selection")
{
    const auto& table = mcs_table();
    REQUIRE(select_mcs(-50.0, 28) == 0);
    REQUIRE(select_mcs(100.0, 28) == 28);
    REQUIRE(select_mcs(100.0, 10) == 10);
    REQUIRE(select_mcs(table[12].snr_threshold_db, 28) == 12);
    REQUIRE(select_mcs(std::nextafter(table[12].snr_threshold_db, -1e9), 28) == 11);
    REQUIRE(select_mcs(std::numeric_limits<double>::infinity(), 28) == 28);
}

TEST_CASE("KPIs from a known channel")
{
    GridDims dims{120, 2, 1, 30.0};
    const auto x = waveform::generate_reference(3, dims);
    const double bin = 1.0 / (120 * 30e3);
    // flat channel at -60 dB with a 5-bin delay: |H|^2 = 1e-6 everywhere
    std::vector<cplx> h(120);
    for (std::size_t k = 0; k < 120; ++k) {
        const double phi = -testing::kTwoPi * static_cast<double>(k) * 5.0 / 120.0;
        h[k] = 1e-3 * cplx(std::cos(phi), std::sin(phi));
    }
    std::vector<cplx> y(240);
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t k = 0; k < 120; ++k) {
            y[s * 120 + k] = h[k] * x.at(k, s);
        }
    }
    KpiInputs in;
    in.h = h;
    in.y_block = y;
    in.reference = &x;
    in.noise_variance_mw = 1e-9;
    in.bandwidth_hz = 20e6;
    in.traffic = {scenario::TrafficKind::periodic_ssb_only, 0.0};
    const auto k = compute_kpis(in);
    REQUIRE(k.rsrp_dbm == Approx(-60.0).margin(1e-9));
    REQUIRE(k.snr_db == Approx(30.0).margin(1e-9));
    REQUIRE(k.rsrq_db == Approx(-10.0 * std::log10(12.0) - 10.0 * std::log10(1.001)).margin(1e-9));
    REQUIRE(k.timing_advance_s == Approx(5.0 * bin).epsilon(1e-12));
    REQUIRE(k.dl_mcs == select_mcs(k.snr_db, 28));
    // log2(1001) = 9.97 > SE(28) = 5.5547, so the cap applies
    REQUIRE(k.throughput_kbps == Approx(20e6 * mcs_table().back().spectral_efficiency / 1e3));

    in.noise_variance_mw = 1e-7; // 10 dB
    const auto low = compute_kpis(in);
    REQUIRE(low.throughput_kbps == Approx(20e6 * std::log2(11.0) / 1e3));

    in.traffic = {scenario::TrafficKind::cbr, 1000.0};
    REQUIRE(compute_kpis(in).throughput_kbps == 1000.0);
    in.traffic = {scenario::TrafficKind::none, 0.0};
    REQUIRE(compute_kpis(in).throughput_kbps == 0.0);

    in.noise_variance_mw = 0.0;
    const auto clean = compute_kpis(in);
    REQUIRE(std::isinf(clean.snr_db));
    REQUIRE(clean.rsrq_db == Approx(-10.0 * std::log10(12.0)));
    REQUIRE(clean.dl_mcs == 28);

    in.y_block = std::span<const cplx>(y).first(10);
    REQUIRE_THROWS_AS(compute_kpis(in), ValidationError);
}

TEST_CASE("KPI columns depend on verbosity")
{
    scenario::LogVerbosity v;
    REQUIRE(kpi_columns(v) ==
            std::vector<std::string>{"rsrp_dbm", "rsrq_db", "snr_db", "throughput_kbps", "dl_mcs", "dl_bler",
                                     "dl_rounds"});
    v.phy = scenario::Verbosity::full;
    v.mac = scenario::Verbosity::off;
    REQUIRE(kpi_columns(v) == std::vector<std::string>{"rsrp_dbm", "rsrq_db", "snr_db", "timing_advance_s"});
    v.phy = scenario::Verbosity::off;
    REQUIRE(kpi_columns(v).empty());
    REQUIRE(kpi_formulas().size() == 6);
}

TEST_CASE("run produces one record per snapshot with matching path loss")
{
    auto spec = small_spec();
    spec.ues[0].channel.preset = "custom";
    spec.ues[0].channel.taps = {{0.0, 0.0, 0.0}};
    spec.ues[0].channel.noise_spectral_density_dbm_hz = channel::kNoiseDisabled;
    std::vector<double> seen;
    const auto ds = run_experiment(spec, [&](double f) { seen.push_back(f); });
    REQUIRE(ds.ues.size() == 1);
    const auto& ue = ds.ues[0];
    REQUIRE(ue.iq.snapshots() == 10);
    REQUIRE(ue.kpis.size() == 10);
    REQUIRE(ue.mobility.size() == 11);
    REQUIRE(std::is_sorted(seen.begin(), seen.end()));
    REQUIRE(seen.front() == 0.0);
    REQUIRE(seen.back() == 1.0);

    const double d = scenario::distance_to_antenna(spec.ues[0].initial_position, spec.radio);
    const double expected = spec.radio.tx_power_dbm - (38.9 + 22.0 * std::log10(d));
    for (std::size_t n = 0; n < 10; ++n) {
        REQUIRE(ue.kpis[n].index == n);
        REQUIRE(ue.kpis[n].time_s == Approx(0.01 * static_cast<double>(n + 1)));
        REQUIRE(*ue.kpis[n].rsrp_dbm == Approx(expected).margin(1e-9));
        REQUIRE(std::isinf(*ue.kpis[n].snr_db));
        REQUIRE_FALSE(ue.kpis[n].timing_advance_s.has_value());
    }
    // a single static tap at delay 0: Y = g X up to float32 rounding
    const auto x = reference_for(spec);
    const double g = std::pow(10.0, expected / 20.0);
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t k = 0; k < 96; ++k) {
            REQUIRE(std::abs(ue.iq(k, s, 3) - g * x.at(k, s)) < 1e-6 * g);
        }
    }
}

TEST_CASE("runs are deterministic in the spec")
{
    auto spec = small_spec();
    spec.ues[0].channel.doppler_hz = 30.0;
    const auto a = run_experiment(spec);
    const auto b = run_experiment(spec);
    REQUIRE(a.ues == b.ues);
    spec.seed = 2;
    const auto c = run_experiment(spec);
    REQUIRE_FALSE(a.ues[0].iq == c.ues[0].iq);
}

TEST_CASE("invalid specs are rejected before running")
{
    auto spec = small_spec();
    spec.radio.max_mcs = 99;
    try {
        (void)run_experiment(spec);
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(std::string(e.what()).find("radio.max_mcs") != std::string::npos);
    }
}

TEST_CASE("events follow verbosity")
{
    auto spec = small_spec();
    spec.ues[0].mobility.kind = scenario::MobilityKind::linear_bounce;
    spec.ues[0].speed_mps = 300.0; // sweeps distance so the MCS changes
    spec.duration_s = 1.0;
    spec.ues[0].mobility_area = {{-50.0, -1.0, 0.0}, {2000.0, 1.0, 3.0}};
    spec.ues[0].channel.noise_spectral_density_dbm_hz = -130.0;
    spec.log_verbosity.rrc = scenario::Verbosity::full;
    const auto full = run_experiment(spec);
    auto names = [](const UEDataset& ue) {
        std::vector<std::string> out;
        for (const auto& e : ue.events) {
            out.push_back(e.name);
        }
        return out;
    };
    const auto n_full = names(full.ues[0]);
    REQUIRE(n_full.front() == "REGISTER");
    REQUIRE(n_full[1] == "PDU_SESSION_SETUP");
    REQUIRE(n_full[2] == "RRC_SETUP");
    REQUIRE(n_full.back() == "RELEASE");
    REQUIRE(std::count(n_full.begin(), n_full.end(), "RRC_RECONFIG") > 0);

    spec.log_verbosity = {scenario::Verbosity::off, scenario::Verbosity::off, scenario::Verbosity::off,
                          scenario::Verbosity::off};
    const auto quiet = run_experiment(spec);
    REQUIRE(names(quiet.ues[0]) == std::vector<std::string>{"REGISTER", "RELEASE"});
    REQUIRE_FALSE(quiet.ues[0].kpis[0].rsrp_dbm.has_value());
    REQUIRE_FALSE(quiet.ues[0].kpis[0].throughput_kbps.has_value());
    // capture does not depend on logging
    REQUIRE(quiet.ues[0].iq == full.ues[0].iq);
}

TEST_CASE("mobility doppler follows speed")
{
    auto spec = small_spec();
    spec.ues[0].mobility.kind = scenario::MobilityKind::linear_bounce;
    spec.ues[0].speed_mps = 30.0;
    spec.ues[0].channel.doppler_from_mobility = true;
    spec.ues[0].channel.noise_spectral_density_dbm_hz = channel::kNoiseDisabled;
    const auto moving = run_experiment(spec);
    spec.ues[0].speed_mps = 0.0;
    spec.ues[0].mobility.kind = scenario::MobilityKind::fixed;
    const auto parked = run_experiment(spec);
    // parked: zero Doppler, fading frozen at its t = 0 value
    REQUIRE(std::abs(parked.ues[0].iq(0, 0, 0) - parked.ues[0].iq(0, 0, 9)) < 1e-6);
    REQUIRE(std::abs(moving.ues[0].iq(0, 0, 0) - moving.ues[0].iq(0, 0, 9)) > 1e-9);
}

TEST_CASE("IQ encoding is float32 little endian interleaved")
{
    IQTensor t(2, 1, 1);
    t(0, 0, 0) = {1.0, -2.0};
    t(1, 0, 0) = {0.5, 3.0};
    const auto bytes = encode_iq(t);
    REQUIRE(bytes.size() == 16);
    const float expected[4] = {1.0f, -2.0f, 0.5f, 3.0f};
    for (int i = 0; i < 4; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(std::to_integer<unsigned>(bytes[i * 4 + b])) << (8 * b);
        }
        float v;
        std::memcpy(&v, &bits, 4);
        REQUIRE(v == expected[i]);
    }
    REQUIRE(decode_iq(bytes, 2, 1, 1) == t);
    REQUIRE_THROWS_AS(decode_iq(bytes, 3, 1, 1), IntegrityError);
}

TEST_CASE("dataset round trip and layout")
{
    auto spec = small_spec();
    spec.ues.push_back(spec.ues[0]);
    spec.ues[1].id = "second";
    spec.ues[1].initial_position = {20.0, 5.0, 1.5};
    spec.log_verbosity.phy = scenario::Verbosity::full;
    const auto ds = run_experiment(spec);
    const auto dir = testing::scratch_dir("dataset");
    const std::string digest = write_dataset(ds, dir);

    for (const char* f : {"manifest.json", "ue0/iq.bin", "ue0/kpis.csv", "ue0/mobility.csv", "ue0/events.log",
                          "ue1/iq.bin"}) {
        REQUIRE(std::filesystem::exists(dir / f));
    }
    REQUIRE(std::filesystem::file_size(dir / "ue0/iq.bin") == 96 * 2 * 10 * 8);

    // digest oracle: SHA-256 over the iq.bin files in UE order
    digest::Sha256 h;
    h.update(slurp(dir / "ue0/iq.bin"));
    h.update(slurp(dir / "ue1/iq.bin"));
    REQUIRE(h.hex_digest() == digest);

    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    REQUIRE(m["iq_sha256"] == digest);
    REQUIRE(m["ues"][0]["iq_sha256"] == digest::sha256_file(dir / "ue0/iq.bin"));
    REQUIRE(m["kpi_formula_ids"].size() == 6);
    REQUIRE(m["grid"]["num_snapshots"] == 10);

    const auto header = lines(slurp(dir / "ue0/kpis.csv")).front();
    REQUIRE(header == "index,time_s,x,y,z,rsrp_dbm,rsrq_db,snr_db,timing_advance_s,throughput_kbps,dl_mcs,dl_bler,"
                      "dl_rounds");
    REQUIRE(lines(slurp(dir / "ue0/mobility.csv")).front() == "time_s,x,y,z,vx,vy,vz");
    REQUIRE(lines(slurp(dir / "ue0/events.log")).front().find("REGISTER") != std::string::npos);

    const auto back = read_dataset(dir);
    REQUIRE(back.ues == ds.ues);
    REQUIRE(back.spec == ds.spec);
    REQUIRE(back.dims == ds.dims);
    REQUIRE(read_ue_iq(dir, 1) == ds.ues[1].iq);
    REQUIRE_NOTHROW(verify_dataset(dir));
    REQUIRE_THROWS_AS(read_ue_iq(dir, 2), ValidationError);
}

TEST_CASE("infinite SNR survives the CSV round trip")
{
    auto spec = small_spec();
    spec.ues[0].channel.noise_spectral_density_dbm_hz = channel::kNoiseDisabled;
    const auto ds = run_experiment(spec);
    const auto dir = testing::scratch_dir("inf-snr");
    write_dataset(ds, dir);
    REQUIRE(lines(slurp(dir / "ue0/kpis.csv"))[1].find("null") != std::string::npos);
    const auto back = read_dataset(dir);
    REQUIRE(std::isinf(*back.ues[0].kpis[0].snr_db));
}

TEST_CASE("corruption is detected and names the file")
{
    const auto ds = run_experiment(small_spec());
    auto expect_integrity = [](const std::filesystem::path& dir, const std::string& fragment) {
        try {
            (void)read_dataset(dir);
            FAIL("expected an IntegrityError");
        } catch (const IntegrityError& e) {
            INFO(e.what());
            REQUIRE(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };

    SECTION("flipped byte")
    {
        const auto dir = testing::scratch_dir("corrupt-flip");
        write_dataset(ds, dir);
        auto bytes = slurp(dir / "ue0/iq.bin");
        bytes[100] = static_cast<char>(bytes[100] ^ 0x40);
        spit(dir / "ue0/iq.bin", bytes);
        expect_integrity(dir, "ue0/iq.bin");
        REQUIRE_THROWS_AS(verify_dataset(dir), IntegrityError);
        REQUIRE_THROWS_AS(read_ue_iq(dir, 0), IntegrityError);
    }
    SECTION("truncated payload")
    {
        const auto dir = testing::scratch_dir("corrupt-trunc");
        write_dataset(ds, dir);
        std::filesystem::resize_file(dir / "ue0/iq.bin", 1000);
        expect_integrity(dir, "ue0/iq.bin");
    }
    SECTION("missing payload")
    {
        const auto dir = testing::scratch_dir("corrupt-missing");
        write_dataset(ds, dir);
        std::filesystem::remove(dir / "ue0/iq.bin");
        expect_integrity(dir, "ue0/iq.bin");
    }
    SECTION("missing KPI rows")
    {
        const auto dir = testing::scratch_dir("corrupt-rows");
        write_dataset(ds, dir);
        auto text = lines(slurp(dir / "ue0/kpis.csv"));
        text.pop_back();
        std::string joined;
        for (const auto& l : text) {
            joined += l + "\n";
        }
        spit(dir / "ue0/kpis.csv", joined);
        expect_integrity(dir, "kpis.csv");
    }
    SECTION("no manifest")
    {
        const auto dir = testing::scratch_dir("corrupt-manifest");
        write_dataset(ds, dir);
        std::filesystem::remove(dir / "manifest.json");
        expect_integrity(dir, "manifest.json");
    }
}
