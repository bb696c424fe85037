// SPDX-License-Identifier: Apache-2.0
//
// nextsense command-line front end.
//
//   nextsense run <spec.json> --out <dir>
//   nextsense replay-estimate <dir> --out <scenario.taps> [--ue N] [--max-taps N] [--floor-db X]
//   nextsense validate-spec <spec.json>
//   nextsense compare <dirA> <dirB> --out <stats.json> [--ue N]
//   nextsense serve [--port N] [--data-dir D] [--workers N]

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "nextsense/api.hpp"
#include "nextsense/estimation.hpp"
#include "nextsense/runner.hpp"
#include "nextsense/scenario_json.hpp"
#include "nextsense/validation.hpp"

namespace ns = nextsense;

namespace {

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ns::IoError(path + ": cannot open for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw ns::IoError(path + ": write failed");
    }
}

int cmd_validate(const std::string& spec_path)
{
    const auto spec = ns::scenario::parse_spec(read_text(spec_path));
    const auto violations = ns::scenario::validate_spec(spec);
    if (violations.empty()) {
        std::cout << spec_path << ": valid (" << spec.ues.size() << " UE, " << ns::scenario::snapshot_count(spec)
                  << " snapshots)\n";
        return 0;
    }
    for (const auto& v : violations) {
        std::cout << v.path << ": " << v.reason << "\n";
    }
    return 2;
}

int cmd_run(const std::string& spec_path, const std::string& out_dir)
{
    const auto spec = ns::scenario::parse_spec(read_text(spec_path));
    int last_percent = -1;
    const auto ds = ns::runner::run_experiment(spec, [&](double f) {
        const int percent = static_cast<int>(f * 100.0);
        if (percent / 10 != last_percent / 10) {
            std::cerr << "progress " << percent << "%\n";
            last_percent = percent;
        }
    });
    const std::string digest = ns::runner::write_dataset(ds, out_dir);
    std::cout << out_dir << " iq_sha256=" << digest << "\n";
    return 0;
}

int cmd_replay(const std::string& dir, const std::string& out, std::size_t ue, std::size_t max_taps, double floor_db)
{
    const auto m = nlohmann::json::parse(read_text(dir + "/manifest.json"));
    const auto spec = ns::scenario::spec_from_json(m.at("spec"));
    const ns::IQTensor y = ns::runner::read_ue_iq(dir, ue);
    const auto x = ns::runner::reference_for(spec);
    ns::estimation::TapSelectionPolicy policy;
    policy.max_taps = max_taps;
    policy.power_floor_db = floor_db;
    ns::channel::ChannelScenario base;
    base.noise_spectral_density_dbm_hz = ns::channel::kNoiseDisabled;
    const auto rec = ns::estimation::reconstruct(y, x, spec.snapshot_interval_s, policy, base);
    std::ostringstream comment;
    comment << "reconstructed from " << dir << " ue" << ue << "; rms delay spread "
            << ns::channel::format_double(rec.rms_delay_spread_s * 1e9) << " ns";
    ns::channel::write_tap_file(out, rec.taps, comment.str());
    std::cout << out << ": " << rec.taps.size() << " taps\n";
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out, std::size_t ue)
{
    const ns::IQTensor ta = ns::runner::read_ue_iq(a, ue);
    const ns::IQTensor tb = ns::runner::read_ue_iq(b, ue);
    const auto stats = ns::validation::ensemble_report(ta, tb);
    write_text(out, ns::validation::to_json(stats).dump(2) + "\n");
    std::cout << "ks_d=" << stats.ks_d << " ks_p=" << stats.ks_p << " wasserstein=" << stats.wasserstein
              << " var_a=" << stats.var_a << " var_b=" << stats.var_b << "\n";
    return 0;
}

volatile std::sig_atomic_t g_stop = 0;

int cmd_serve(ns::api::ServiceConfig cfg)
{
    ns::api::Service service(cfg);
    ns::api::HttpServer server(service);
    const int port = server.start("0.0.0.0", cfg.port);
    std::cout << "serving /v1 on port " << port << ", data in " << cfg.data_dir.string() << std::endl;
    std::signal(SIGINT, [](int) { g_stop = 1; });
    std::signal(SIGTERM, [](int) { g_stop = 1; });
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    server.stop();
    service.shutdown();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"nextsense: channel emulation, capture and validation"};
    app.set_version_flag("--version", std::string(NEXTSENSE_VERSION));
    app.require_subcommand(1);

    std::string spec_path;
    std::string out;
    std::string dir_a;
    std::string dir_b;
    std::size_t ue = 0;
    std::size_t max_taps = 12;
    double floor_db = -25.0;

    auto* run = app.add_subcommand("run", "Run an experiment and write its dataset");
    run->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Dataset directory")->required();

    auto* replay = app.add_subcommand("replay-estimate", "Reconstruct a tap file from a recorded dataset");
    replay->add_option("dir", dir_a, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    replay->add_option("--out", out, "Output tap file")->required();
    replay->add_option("--ue", ue, "UE index");
    replay->add_option("--max-taps", max_taps, "Maximum number of taps")->check(CLI::PositiveNumber);
    replay->add_option("--floor-db", floor_db, "Power floor relative to the strongest bin");

    auto* validate = app.add_subcommand("validate-spec", "Check an experiment spec");
    validate->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);

    auto* compare = app.add_subcommand("compare", "Compare two datasets");
    compare->add_option("a", dir_a, "First dataset")->required()->check(CLI::ExistingDirectory);
    compare->add_option("b", dir_b, "Second dataset")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--out", out, "Output stats.json")->required();
    compare->add_option("--ue", ue, "UE index");

    ns::api::ServiceConfig cfg = ns::api::ServiceConfig::from_env();
    std::string data_dir = cfg.data_dir.string();
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--port", cfg.port, "Listen port");
    serve->add_option("--data-dir", data_dir, "Registry and dataset directory");
    serve->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(spec_path, out);
        }
        if (*replay) {
            return cmd_replay(dir_a, out, ue, max_taps, floor_db);
        }
        if (*validate) {
            return cmd_validate(spec_path);
        }
        if (*compare) {
            return cmd_compare(dir_a, dir_b, out, ue);
        }
        if (*serve) {
            cfg.data_dir = data_dir;
            return cmd_serve(cfg);
        }
    } catch (const ns::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ns::IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
