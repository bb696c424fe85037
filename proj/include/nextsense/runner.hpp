// SPDX-License-Identifier: Apache-2.0
//
// End-to-end experiment execution: mobility, path loss, channel, IQ capture,
// KPIs and the on-disk dataset.
//
// Dataset layout (one directory per run):
//
//     manifest.json
//     ue<u>/iq.bin       float32 LE, interleaved I/Q, snapshot > symbol > subcarrier
//     ue<u>/kpis.csv     one row per snapshot
//     ue<u>/mobility.csv one row per trajectory sample (snapshots + 1)
//     ue<u>/events.log   "<time_s> <EVENT> <detail>" lines

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nextsense/core.hpp"
#include "nextsense/scenario.hpp"
#include "nextsense/waveform.hpp"

namespace nextsense::runner {

inline constexpr int kDatasetFormatVersion = 1;

/// KPIs of one UE at one snapshot. Fields switched off by log_verbosity are
/// empty. snr_db is +inf when the noise source is disabled.
struct SnapshotRecord {
    std::size_t index = 0;
    double time_s = 0.0;
    Vec3 position{};
    std::optional<double> rsrp_dbm;
    std::optional<double> rsrq_db;
    std::optional<double> snr_db;
    std::optional<double> timing_advance_s;
    std::optional<double> throughput_kbps;
    std::optional<int> dl_mcs;

    bool operator==(const SnapshotRecord&) const = default;
};

struct Event {
    double time_s = 0.0;
    std::string name; // REGISTER, PDU_SESSION_SETUP, RRC_SETUP, RRC_RECONFIG, RELEASE
    std::string detail;

    bool operator==(const Event&) const = default;
};

struct UEDataset {
    std::string id;
    IQTensor iq;
    std::vector<SnapshotRecord> kpis;
    std::vector<scenario::TrajectorySample> mobility;
    std::vector<Event> events;

    bool operator==(const UEDataset&) const = default;
};

struct RunDataset {
    scenario::ExperimentSpec spec;
    GridDims dims;
    std::vector<UEDataset> ues;
    std::string created_at;  // ISO 8601 UTC
    std::string finished_at; // ISO 8601 UTC
};

// ---------------------------------------------------------------------------
// KPIs

struct McsEntry {
    int mcs = 0;
    int modulation_order = 0;
    double code_rate_x1024 = 0.0;
    double spectral_efficiency = 0.0; // bit/s/Hz
    double snr_threshold_db = 0.0;
};

/// Implementation margin added to the Shannon SNR of each MCS.
inline constexpr double kMcsMarginDb = 1.5;

/// Parsed from the shipped MCS table; threshold = 10 log10(2^SE - 1) + margin.
const std::vector<McsEntry>& mcs_table();

/// Highest MCS whose threshold is <= snr_db, clipped to max_mcs. 0 when
/// none qualifies.
int select_mcs(double snr_db, int max_mcs);

struct KpiInputs {
    std::span<const cplx> h;       // noiseless H(k) including the large-scale gain
    std::span<const cplx> y_block; // received K*S block (symbol-major)
    const waveform::ReferenceSignal* reference = nullptr;
    double noise_variance_mw = 0.0; // per resource element; 0 disables
    double bandwidth_hz = 0.0;
    scenario::TrafficProfile traffic;
    int max_mcs = 28;
};

struct KpiValues {
    double rsrp_dbm = 0.0;
    double rsrq_db = 0.0;
    double snr_db = 0.0;
    double timing_advance_s = 0.0;
    double throughput_kbps = 0.0;
    int dl_mcs = 0;
};

/// RSRP = 10 log10(mean_k |H(k)|^2) in dBm (H carries tx power, path loss and
/// antenna gain); SNR = RSRP - 10 log10(noise variance per RE);
/// RSRQ = -10 log10(12) - 10 log10(1 + 1/snr) (fully loaded resource block);
/// TA = delay of the strongest bin of the IDFT of the LS estimate of y_block;
/// throughput = B * min(log2(1 + snr), SE(max_mcs)), 0 for traffic "none",
/// capped at the CBR rate for "cbr"; dl_mcs = select_mcs(SNR).
KpiValues compute_kpis(const KpiInputs& in);

/// Stable identifiers and one-line formulas, recorded in every manifest.
const std::vector<std::pair<std::string, std::string>>& kpi_formulas();

/// KPI CSV columns emitted for a verbosity setting, after index,time_s,x,y,z.
std::vector<std::string> kpi_columns(const scenario::LogVerbosity& v);

// ---------------------------------------------------------------------------
// Execution

/// Called with the completed fraction in [0, 1], non-decreasing.
using ProgressFn = std::function<void(double)>;

/// Runs the experiment. Throws ValidationError listing every violation when
/// the spec is invalid. Pure in the spec apart from the timestamps.
RunDataset run_experiment(const scenario::ExperimentSpec& spec, const ProgressFn& progress = {});

/// The pilot grid a run transmits (regenerated from the spec).
waveform::ReferenceSignal reference_for(const scenario::ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Storage

std::string ue_dir_name(std::size_t ue_index);

/// Writes the layout above into dir (created if needed) and returns the
/// SHA-256 of the iq.bin files concatenated in UE order. Throws IoError with
/// the path on failure.
std::string write_dataset(const RunDataset& ds, const std::filesystem::path& dir);

/// Inverse of write_dataset. Throws IntegrityError naming the file when a
/// payload is missing, truncated or does not match its recorded digest.
RunDataset read_dataset(const std::filesystem::path& dir);

/// Integrity check only: lengths and digests of every iq.bin.
void verify_dataset(const std::filesystem::path& dir);

/// IQ tensor of one UE, read and verified without parsing the CSV files.
IQTensor read_ue_iq(const std::filesystem::path& dir, std::size_t ue_index);

/// float32 little-endian interleaved I/Q encoding used by iq.bin.
std::vector<std::byte> encode_iq(const IQTensor& t);
IQTensor decode_iq(std::span<const std::byte> bytes, std::size_t k, std::size_t s, std::size_t n);

std::string utc_timestamp();

} // namespace nextsense::runner
