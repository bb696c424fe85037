// SPDX-License-Identifier: Apache-2.0

#include "nextsense/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <mutex>

#include "embedded_data.hpp"
#include "nextsense/channel.hpp"
#include "nextsense/dft.hpp"
#include "nextsense/estimation.hpp"

namespace nextsense::runner {

using scenario::ExperimentSpec;
using scenario::TrafficKind;
using scenario::Verbosity;

namespace {

std::vector<McsEntry> parse_mcs_table(std::string_view text)
{
    std::vector<McsEntry> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        double fields[4] = {};
        std::size_t field = 0;
        const char* p = line.data();
        const char* last = line.data() + line.size();
        while (field < 4 && p < last) {
            auto [next, ec] = std::from_chars(p, last, fields[field]);
            if (ec != std::errc{}) {
                throw std::runtime_error("mcs table: malformed line '" + std::string(line) + "'");
            }
            ++field;
            p = next < last && *next == ',' ? next + 1 : next;
        }
        if (field != 4) {
            throw std::runtime_error("mcs table: expected 4 columns in '" + std::string(line) + "'");
        }
        McsEntry e;
        e.mcs = static_cast<int>(fields[0]);
        e.modulation_order = static_cast<int>(fields[1]);
        e.code_rate_x1024 = fields[2];
        e.spectral_efficiency = fields[3];
        e.snr_threshold_db = 10.0 * std::log10(std::exp2(e.spectral_efficiency) - 1.0) + kMcsMarginDb;
        out.push_back(e);
    }
    return out;
}

double spectral_efficiency_cap(int max_mcs)
{
    const auto& table = mcs_table();
    double cap = table.front().spectral_efficiency;
    for (const auto& e : table) {
        if (e.mcs <= max_mcs) {
            cap = std::max(cap, e.spectral_efficiency);
        }
    }
    return cap;
}

bool at_least(Verbosity v, Verbosity level)
{
    return static_cast<int>(v) >= static_cast<int>(level);
}

void apply_verbosity(SnapshotRecord& r, const KpiValues& k, const scenario::LogVerbosity& v)
{
    if (at_least(v.phy, Verbosity::summary)) {
        r.rsrp_dbm = k.rsrp_dbm;
        r.rsrq_db = k.rsrq_db;
        r.snr_db = k.snr_db;
    }
    if (at_least(v.phy, Verbosity::full)) {
        r.timing_advance_s = k.timing_advance_s;
    }
    if (at_least(v.mac, Verbosity::summary)) {
        r.throughput_kbps = k.throughput_kbps;
        r.dl_mcs = k.dl_mcs;
    }
}

// Recorded samples are float32 on disk; quantizing in memory keeps the
// in-memory dataset equal to what read_dataset returns.
void quantize_to_float(std::span<cplx> block)
{
    for (cplx& v : block) {
        v = cplx(static_cast<float>(v.real()), static_cast<float>(v.imag()));
    }
}

} // namespace

const std::vector<McsEntry>& mcs_table()
{
    static const std::vector<McsEntry> table = parse_mcs_table(data::kMcsTable);
    return table;
}

int select_mcs(double snr_db, int max_mcs)
{
    int best = 0;
    for (const auto& e : mcs_table()) {
        if (e.mcs <= max_mcs && e.snr_threshold_db <= snr_db) {
            best = std::max(best, e.mcs);
        }
    }
    return best;
}

KpiValues compute_kpis(const KpiInputs& in)
{
    if (in.h.empty() || in.reference == nullptr) {
        throw ValidationError("compute_kpis: channel response and reference are required");
    }
    const waveform::ReferenceSignal& x = *in.reference;
    const std::size_t k_count = x.num_subcarriers;
    if (in.h.size() != k_count || in.y_block.size() != k_count * x.num_symbols) {
        throw ValidationError("compute_kpis: block sizes do not match the reference grid");
    }
    KpiValues out;
    double mean_gain = 0.0;
    for (const cplx& v : in.h) {
        mean_gain += std::norm(v);
    }
    mean_gain /= static_cast<double>(k_count);
    out.rsrp_dbm = 10.0 * std::log10(mean_gain);

    double snr_linear = std::numeric_limits<double>::infinity();
    if (in.noise_variance_mw > 0.0) {
        out.snr_db = out.rsrp_dbm - 10.0 * std::log10(in.noise_variance_mw);
        snr_linear = std::pow(10.0, out.snr_db / 10.0);
    } else {
        out.snr_db = std::numeric_limits<double>::infinity();
    }
    out.rsrq_db = -10.0 * std::log10(12.0) - 10.0 * std::log10(1.0 + 1.0 / snr_linear);

    // strongest delay bin of the least-squares estimate of this snapshot
    std::vector<cplx> h_hat(k_count);
    const double inv_s = 1.0 / static_cast<double>(x.num_symbols);
    for (std::size_t s = 0; s < x.num_symbols; ++s) {
        for (std::size_t k = 0; k < k_count; ++k) {
            h_hat[k] += in.y_block[s * k_count + k] / x.at(k, s) * inv_s;
        }
    }
    const std::vector<cplx> impulse = dft::inverse(h_hat);
    std::size_t peak = 0;
    for (std::size_t l = 1; l < impulse.size(); ++l) {
        if (std::norm(impulse[l]) > std::norm(impulse[peak])) {
            peak = l;
        }
    }
    out.timing_advance_s = static_cast<double>(peak) * estimation::bin_duration(k_count, x.subcarrier_spacing_khz);

    out.dl_mcs = select_mcs(out.snr_db, in.max_mcs);
    double throughput = 0.0;
    if (in.traffic.kind != TrafficKind::none) {
        const double se = std::min(std::log2(1.0 + snr_linear), spectral_efficiency_cap(in.max_mcs));
        throughput = in.bandwidth_hz * se / 1e3;
        if (in.traffic.kind == TrafficKind::cbr) {
            throughput = std::min(throughput, in.traffic.cbr_rate_kbps);
        }
    }
    out.throughput_kbps = throughput;
    return out;
}

const std::vector<std::pair<std::string, std::string>>& kpi_formulas()
{
    static const std::vector<std::pair<std::string, std::string>> formulas = {
        {"rsrp.v1", "rsrp_dbm = 10*log10(mean_k |H(k)|^2), H including tx power, path loss and antenna gain"},
        {"snr.v1", "snr_db = rsrp_dbm - 10*log10(N0 * subcarrier_spacing); null when noise is disabled"},
        {"rsrq.v1", "rsrq_db = -10*log10(12) - 10*log10(1 + 1/snr_linear)"},
        {"ta.v1", "timing_advance_s = argmax_l |IDFT(LS estimate)(l)|^2 * 1/(K * subcarrier_spacing)"},
        {"throughput.v1",
         "throughput_kbps = bandwidth * min(log2(1 + snr_linear), SE(max_mcs)) / 1e3; 0 for traffic none; "
         "min(., cbr_rate_kbps) for cbr"},
        {"dl_mcs.v1", "dl_mcs = max{m <= max_mcs : 10*log10(2^SE(m) - 1) + 1.5 <= snr_db}, 0 if none"},
    };
    return formulas;
}

std::vector<std::string> kpi_columns(const scenario::LogVerbosity& v)
{
    std::vector<std::string> cols;
    if (at_least(v.phy, Verbosity::summary)) {
        cols.insert(cols.end(), {"rsrp_dbm", "rsrq_db", "snr_db"});
    }
    if (at_least(v.phy, Verbosity::full)) {
        cols.emplace_back("timing_advance_s");
    }
    if (at_least(v.mac, Verbosity::summary)) {
        // BLER and HARQ rounds need a decoder; the columns are reserved and empty.
        cols.insert(cols.end(), {"throughput_kbps", "dl_mcs", "dl_bler", "dl_rounds"});
    }
    return cols;
}

waveform::ReferenceSignal reference_for(const ExperimentSpec& spec)
{
    return waveform::generate_reference(spec.capture.reference_seed, scenario::grid_dims(spec));
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunDataset run_experiment(const ExperimentSpec& spec, const ProgressFn& progress)
{
    const auto violations = scenario::validate_spec(spec);
    if (!violations.empty()) {
        std::string msg = "invalid experiment spec:";
        for (const auto& v : violations) {
            msg += " " + v.path + ": " + v.reason + ";";
        }
        throw ValidationError(msg);
    }
    RunDataset ds;
    ds.spec = spec;
    ds.dims = scenario::grid_dims(spec);
    ds.created_at = utc_timestamp();
    const waveform::ReferenceSignal x = reference_for(spec);
    const std::size_t n_count = ds.dims.num_snapshots;
    const std::size_t k_count = ds.dims.num_subcarriers;
    const std::size_t s_count = ds.dims.num_symbols;
    const double carrier_hz = spec.radio.carrier_frequency_mhz * 1e6;
    const double total_steps = static_cast<double>(n_count * spec.ues.size());
    std::size_t done = 0;
    if (progress) {
        progress(0.0);
    }

    for (std::size_t u = 0; u < spec.ues.size(); ++u) {
        const scenario::UESpec& ue = spec.ues[u];
        UEDataset out;
        out.id = ue.id;
        out.iq = IQTensor(k_count, s_count, n_count);
        out.mobility = scenario::trajectory(ue, spec.duration_s, spec.snapshot_interval_s);
        const channel::ChannelScenario sc = scenario::build_channel(spec, u);
        channel::ChannelEmulator emulator(sc, k_count, s_count, ds.dims.subcarrier_spacing_khz);
        const std::size_t ports = sc.num_ports;
        std::vector<std::vector<cplx>> extra_ports(ports > 1 ? ports - 1 : 0, std::vector<cplx>(k_count * s_count));

        out.events.push_back({0.0, "REGISTER", "ue=" + ue.id});
        if (at_least(spec.log_verbosity.nas, Verbosity::summary)) {
            out.events.push_back({0.0, "PDU_SESSION_SETUP", "ue=" + ue.id});
        }

        std::optional<int> last_mcs;
        for (std::size_t n = 0; n < n_count; ++n) {
            const scenario::TrajectorySample& where = out.mobility[n + 1];
            const double t = where.time_s;
            emulator.set_mobility_doppler(norm3(where.velocity) * carrier_hz / kSpeedOfLight);
            const double distance = scenario::distance_to_antenna(where.position, spec.radio);
            const double gain_db = spec.radio.tx_power_dbm -
                                   channel::path_loss_db(sc.path_loss_a_db, sc.path_loss_b_db, distance) +
                                   scenario::antenna_gain_db(where.position, spec.radio);
            std::vector<std::span<cplx>> blocks{out.iq.snapshot(n)};
            for (auto& p : extra_ports) {
                blocks.emplace_back(p);
            }
            const auto h = emulator.apply_snapshot(x, t, gain_db, blocks);
            quantize_to_float(out.iq.snapshot(n));

            KpiInputs in;
            in.h = h.front();
            in.y_block = out.iq.snapshot(n);
            in.reference = &x;
            in.noise_variance_mw = emulator.noise_variance();
            in.bandwidth_hz = spec.radio.bandwidth_mhz * 1e6;
            in.traffic = ue.traffic;
            in.max_mcs = spec.radio.max_mcs;
            const KpiValues k = compute_kpis(in);

            SnapshotRecord rec;
            rec.index = n;
            rec.time_s = t;
            rec.position = where.position;
            apply_verbosity(rec, k, spec.log_verbosity);
            out.kpis.push_back(rec);

            if (!last_mcs) {
                if (at_least(spec.log_verbosity.rrc, Verbosity::summary)) {
                    out.events.push_back({t, "RRC_SETUP", "mcs=" + std::to_string(k.dl_mcs)});
                }
            } else if (*last_mcs != k.dl_mcs && at_least(spec.log_verbosity.rrc, Verbosity::full)) {
                out.events.push_back(
                    {t, "RRC_RECONFIG", "mcs=" + std::to_string(*last_mcs) + "->" + std::to_string(k.dl_mcs)});
            }
            last_mcs = k.dl_mcs;

            ++done;
            if (progress) {
                progress(static_cast<double>(done) / total_steps);
            }
        }
        out.events.push_back({out.mobility.back().time_s, "RELEASE", "ue=" + ue.id});
        ds.ues.push_back(std::move(out));
    }
    ds.finished_at = utc_timestamp();
    return ds;
}

} // namespace nextsense::runner
