// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nextsense/channel.hpp"
#include "nextsense/digest.hpp"
#include "nextsense/runner.hpp"
#include "nextsense/scenario_json.hpp"

namespace nextsense::runner {

namespace fs = std::filesystem;
using nlohmann::json;
using channel::format_double;

static_assert(std::endian::native == std::endian::little, "iq.bin encoding assumes a little-endian host");

namespace {

void write_file(const fs::path& path, std::span<const std::byte> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string() + ": cannot open for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError(path.string() + ": write failed");
    }
}

void write_text(const fs::path& path, std::string_view text)
{
    write_file(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IntegrityError(path.string() + ": missing or unreadable");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string optional_cell(const std::optional<double>& v)
{
    if (!v) {
        return "";
    }
    if (std::isinf(*v) && *v > 0) {
        return "null";
    }
    return format_double(*v);
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t end = line.find(sep, pos);
        if (end == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, end - pos));
        pos = end + 1;
    }
}

std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> out;
    for (auto line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (!line.empty()) {
            out.push_back(line);
        }
    }
    return out;
}

double parse_double(std::string_view cell, const fs::path& file)
{
    if (cell == "null") {
        return std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || p != cell.data() + cell.size()) {
        throw IntegrityError(file.string() + ": malformed number '" + std::string(cell) + "'");
    }
    return v;
}

std::optional<double> parse_optional(std::string_view cell, const fs::path& file)
{
    if (cell.empty()) {
        return std::nullopt;
    }
    return parse_double(cell, file);
}

std::string kpi_csv(const UEDataset& ue, const scenario::LogVerbosity& verbosity)
{
    const auto cols = kpi_columns(verbosity);
    std::string out = "index,time_s,x,y,z";
    for (const auto& c : cols) {
        out += "," + c;
    }
    out += "\n";
    for (const auto& r : ue.kpis) {
        out += std::to_string(r.index) + "," + format_double(r.time_s) + "," + format_double(r.position[0]) + "," +
               format_double(r.position[1]) + "," + format_double(r.position[2]);
        for (const auto& c : cols) {
            out += ",";
            if (c == "rsrp_dbm") {
                out += optional_cell(r.rsrp_dbm);
            } else if (c == "rsrq_db") {
                out += optional_cell(r.rsrq_db);
            } else if (c == "snr_db") {
                out += optional_cell(r.snr_db);
            } else if (c == "timing_advance_s") {
                out += optional_cell(r.timing_advance_s);
            } else if (c == "throughput_kbps") {
                out += optional_cell(r.throughput_kbps);
            } else if (c == "dl_mcs") {
                out += r.dl_mcs ? std::to_string(*r.dl_mcs) : "";
            }
        }
        out += "\n";
    }
    return out;
}

std::vector<SnapshotRecord> parse_kpi_csv(std::string_view text, const fs::path& file)
{
    const auto lines = lines_of(text);
    if (lines.empty()) {
        throw IntegrityError(file.string() + ": empty file");
    }
    const auto header = split(lines[0], ',');
    std::map<std::string_view, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col[header[i]] = i;
    }
    for (const char* required : {"index", "time_s", "x", "y", "z"}) {
        if (!col.count(required)) {
            throw IntegrityError(file.string() + ": missing column '" + required + "'");
        }
    }
    std::vector<SnapshotRecord> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = split(lines[li], ',');
        if (cells.size() != header.size()) {
            throw IntegrityError(file.string() + ": row " + std::to_string(li) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
        }
        auto cell = [&](std::string_view name) -> std::string_view {
            auto it = col.find(name);
            return it == col.end() ? std::string_view{} : cells[it->second];
        };
        SnapshotRecord r;
        r.index = static_cast<std::size_t>(parse_double(cell("index"), file));
        r.time_s = parse_double(cell("time_s"), file);
        r.position = {parse_double(cell("x"), file), parse_double(cell("y"), file), parse_double(cell("z"), file)};
        r.rsrp_dbm = parse_optional(cell("rsrp_dbm"), file);
        r.rsrq_db = parse_optional(cell("rsrq_db"), file);
        r.snr_db = parse_optional(cell("snr_db"), file);
        r.timing_advance_s = parse_optional(cell("timing_advance_s"), file);
        r.throughput_kbps = parse_optional(cell("throughput_kbps"), file);
        if (auto m = parse_optional(cell("dl_mcs"), file)) {
            r.dl_mcs = static_cast<int>(*m);
        }
        out.push_back(r);
    }
    return out;
}

std::string mobility_csv(const UEDataset& ue)
{
    std::string out = "time_s,x,y,z,vx,vy,vz\n";
    for (const auto& m : ue.mobility) {
        out += format_double(m.time_s);
        for (double v : m.position) {
            out += "," + format_double(v);
        }
        for (double v : m.velocity) {
            out += "," + format_double(v);
        }
        out += "\n";
    }
    return out;
}

std::vector<scenario::TrajectorySample> parse_mobility_csv(std::string_view text, const fs::path& file)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "time_s,x,y,z,vx,vy,vz") {
        throw IntegrityError(file.string() + ": unexpected header");
    }
    std::vector<scenario::TrajectorySample> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = split(lines[li], ',');
        if (cells.size() != 7) {
            throw IntegrityError(file.string() + ": row " + std::to_string(li) + " does not have 7 cells");
        }
        scenario::TrajectorySample s;
        s.time_s = parse_double(cells[0], file);
        for (std::size_t i = 0; i < 3; ++i) {
            s.position[i] = parse_double(cells[1 + i], file);
            s.velocity[i] = parse_double(cells[4 + i], file);
        }
        out.push_back(s);
    }
    return out;
}

std::string events_log(const UEDataset& ue)
{
    std::string out;
    for (const auto& e : ue.events) {
        out += format_double(e.time_s) + " " + e.name;
        if (!e.detail.empty()) {
            out += " " + e.detail;
        }
        out += "\n";
    }
    return out;
}

std::vector<Event> parse_events(std::string_view text, const fs::path& file)
{
    std::vector<Event> out;
    for (auto line : lines_of(text)) {
        const std::size_t a = line.find(' ');
        if (a == std::string_view::npos) {
            throw IntegrityError(file.string() + ": malformed event line '" + std::string(line) + "'");
        }
        Event e;
        e.time_s = parse_double(line.substr(0, a), file);
        const std::string_view rest = line.substr(a + 1);
        const std::size_t b = rest.find(' ');
        e.name = std::string(rest.substr(0, b));
        if (b != std::string_view::npos) {
            e.detail = std::string(rest.substr(b + 1));
        }
        out.push_back(std::move(e));
    }
    return out;
}

json read_manifest(const fs::path& dir)
{
    const fs::path path = dir / "manifest.json";
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw IntegrityError(path.string() + ": malformed manifest: " + e.what());
    }
}

struct ManifestView {
    GridDims dims;
    std::vector<std::string> ue_digests;
    std::string total_digest;
};

ManifestView manifest_view(const json& m, const fs::path& dir)
{
    const fs::path path = dir / "manifest.json";
    try {
        if (m.at("format_version").get<int>() != kDatasetFormatVersion) {
            throw IntegrityError(path.string() + ": unsupported dataset format_version");
        }
        ManifestView v;
        const json& g = m.at("grid");
        v.dims.num_subcarriers = g.at("num_subcarriers").get<std::size_t>();
        v.dims.num_symbols = g.at("num_symbols").get<std::size_t>();
        v.dims.num_snapshots = g.at("num_snapshots").get<std::size_t>();
        v.dims.subcarrier_spacing_khz = g.at("subcarrier_spacing_khz").get<double>();
        for (const json& ue : m.at("ues")) {
            v.ue_digests.push_back(ue.at("iq_sha256").get<std::string>());
        }
        v.total_digest = m.at("iq_sha256").get<std::string>();
        return v;
    } catch (const json::exception& e) {
        throw IntegrityError(path.string() + ": incomplete manifest: " + e.what());
    }
}

std::vector<std::byte> read_iq_bytes(const fs::path& path, std::size_t expected_bytes)
{
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) {
        throw IntegrityError(path.string() + ": missing IQ payload");
    }
    if (size != expected_bytes) {
        throw IntegrityError(path.string() + ": expected " + std::to_string(expected_bytes) + " bytes, found " +
                             std::to_string(size));
    }
    std::vector<std::byte> bytes(size);
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) {
        throw IntegrityError(path.string() + ": short read");
    }
    return bytes;
}

std::size_t iq_bytes(const GridDims& d)
{
    return d.num_subcarriers * d.num_symbols * d.num_snapshots * 2 * sizeof(float);
}

} // namespace

std::string ue_dir_name(std::size_t ue_index)
{
    return "ue" + std::to_string(ue_index);
}

std::vector<std::byte> encode_iq(const IQTensor& t)
{
    std::vector<std::byte> out(t.size() * 2 * sizeof(float));
    std::byte* p = out.data();
    for (const cplx& v : t.data()) {
        const float re = static_cast<float>(v.real());
        const float im = static_cast<float>(v.imag());
        std::memcpy(p, &re, sizeof re);
        std::memcpy(p + sizeof re, &im, sizeof im);
        p += 2 * sizeof(float);
    }
    return out;
}

IQTensor decode_iq(std::span<const std::byte> bytes, std::size_t k, std::size_t s, std::size_t n)
{
    IQTensor t(k, s, n);
    if (bytes.size() != t.size() * 2 * sizeof(float)) {
        throw IntegrityError("decode_iq: payload of " + std::to_string(bytes.size()) + " bytes does not match " +
                             t.shape_string());
    }
    const std::byte* p = bytes.data();
    for (cplx& v : t.data()) {
        float re = 0.0F;
        float im = 0.0F;
        std::memcpy(&re, p, sizeof re);
        std::memcpy(&im, p + sizeof re, sizeof im);
        v = cplx(re, im);
        p += 2 * sizeof(float);
    }
    return t;
}

std::string write_dataset(const RunDataset& ds, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError(dir.string() + ": cannot create directory: " + ec.message());
    }
    digest::Sha256 total;
    json ues = json::array();
    for (std::size_t u = 0; u < ds.ues.size(); ++u) {
        const UEDataset& ue = ds.ues[u];
        if (ue.iq.subcarriers() != ds.dims.num_subcarriers || ue.iq.symbols() != ds.dims.num_symbols ||
            ue.iq.snapshots() != ds.dims.num_snapshots || ue.kpis.size() != ue.iq.snapshots() ||
            ue.mobility.size() != ue.iq.snapshots() + 1) {
            throw ValidationError("write_dataset: UE '" + ue.id + "' payloads are not aligned with the grid");
        }
        const fs::path sub = dir / ue_dir_name(u);
        fs::create_directories(sub, ec);
        if (ec) {
            throw IoError(sub.string() + ": cannot create directory: " + ec.message());
        }
        const auto bytes = encode_iq(ue.iq);
        write_file(sub / "iq.bin", bytes);
        total.update(bytes);
        write_text(sub / "kpis.csv", kpi_csv(ue, ds.spec.log_verbosity));
        write_text(sub / "mobility.csv", mobility_csv(ue));
        write_text(sub / "events.log", events_log(ue));
        ues.push_back({{"index", u},
                       {"id", ue.id},
                       {"dir", ue_dir_name(u)},
                       {"iq_sha256", digest::sha256_hex(bytes)},
                       {"iq_bytes", bytes.size()},
                       {"kpi_rows", ue.kpis.size()},
                       {"mobility_rows", ue.mobility.size()}});
    }
    const std::string total_digest = total.hex_digest();

    json formulas = json::object();
    json formula_ids = json::array();
    for (const auto& [id, text] : kpi_formulas()) {
        formula_ids.push_back(id);
        formulas[id] = text;
    }
    const json manifest = {
        {"format_version", kDatasetFormatVersion},
        {"engine_version", NEXTSENSE_VERSION},
        {"name", ds.spec.name},
        {"seed", ds.spec.seed},
        {"created_at", ds.created_at},
        {"finished_at", ds.finished_at},
        {"grid",
         {{"num_subcarriers", ds.dims.num_subcarriers},
          {"num_symbols", ds.dims.num_symbols},
          {"num_snapshots", ds.dims.num_snapshots},
          {"subcarrier_spacing_khz", ds.dims.subcarrier_spacing_khz}}},
        {"iq_encoding", "float32 little-endian, interleaved I/Q, order snapshot > symbol > subcarrier"},
        {"kpi_columns", kpi_columns(ds.spec.log_verbosity)},
        {"kpi_formula_ids", formula_ids},
        {"kpi_formulas", formulas},
        {"digest_algorithm", "sha256"},
        {"iq_sha256", total_digest},
        {"ues", ues},
        {"spec", scenario::to_json(ds.spec)},
    };
    // manifest last: a directory without one is an incomplete run
    const fs::path tmp = dir / "manifest.json.tmp";
    write_text(tmp, manifest.dump(2) + "\n");
    fs::rename(tmp, dir / "manifest.json", ec);
    if (ec) {
        throw IoError((dir / "manifest.json").string() + ": cannot finalize: " + ec.message());
    }
    return total_digest;
}

IQTensor read_ue_iq(const fs::path& dir, std::size_t ue_index)
{
    const ManifestView view = manifest_view(read_manifest(dir), dir);
    if (ue_index >= view.ue_digests.size()) {
        throw ValidationError("read_ue_iq: dataset has " + std::to_string(view.ue_digests.size()) + " UEs");
    }
    const fs::path path = dir / ue_dir_name(ue_index) / "iq.bin";
    const auto bytes = read_iq_bytes(path, iq_bytes(view.dims));
    if (digest::sha256_hex(bytes) != view.ue_digests[ue_index]) {
        throw IntegrityError(path.string() + ": digest does not match the manifest");
    }
    return decode_iq(bytes, view.dims.num_subcarriers, view.dims.num_symbols, view.dims.num_snapshots);
}

void verify_dataset(const fs::path& dir)
{
    const ManifestView view = manifest_view(read_manifest(dir), dir);
    digest::Sha256 total;
    for (std::size_t u = 0; u < view.ue_digests.size(); ++u) {
        const fs::path path = dir / ue_dir_name(u) / "iq.bin";
        const auto bytes = read_iq_bytes(path, iq_bytes(view.dims));
        if (digest::sha256_hex(bytes) != view.ue_digests[u]) {
            throw IntegrityError(path.string() + ": digest does not match the manifest");
        }
        total.update(bytes);
    }
    if (total.hex_digest() != view.total_digest) {
        throw IntegrityError((dir / "manifest.json").string() + ": combined IQ digest does not match");
    }
}

RunDataset read_dataset(const fs::path& dir)
{
    const json m = read_manifest(dir);
    const ManifestView view = manifest_view(m, dir);
    verify_dataset(dir);
    RunDataset ds;
    try {
        ds.spec = scenario::spec_from_json(m.at("spec"));
        ds.created_at = m.value("created_at", "");
        ds.finished_at = m.value("finished_at", "");
    } catch (const std::exception& e) {
        throw IntegrityError((dir / "manifest.json").string() + ": embedded spec is unreadable: " + e.what());
    }
    ds.dims = view.dims;
    const json& ues = m.at("ues");
    for (std::size_t u = 0; u < view.ue_digests.size(); ++u) {
        const fs::path sub = dir / ue_dir_name(u);
        UEDataset ue;
        ue.id = ues[u].value("id", ue_dir_name(u));
        ue.iq = decode_iq(read_iq_bytes(sub / "iq.bin", iq_bytes(view.dims)), view.dims.num_subcarriers,
                          view.dims.num_symbols, view.dims.num_snapshots);
        ue.kpis = parse_kpi_csv(read_text(sub / "kpis.csv"), sub / "kpis.csv");
        ue.mobility = parse_mobility_csv(read_text(sub / "mobility.csv"), sub / "mobility.csv");
        ue.events = parse_events(read_text(sub / "events.log"), sub / "events.log");
        if (ue.kpis.size() != view.dims.num_snapshots) {
            throw IntegrityError((sub / "kpis.csv").string() + ": row count does not match the snapshot count");
        }
        if (ue.mobility.size() != view.dims.num_snapshots + 1) {
            throw IntegrityError((sub / "mobility.csv").string() + ": row count does not match the snapshot count");
        }
        ds.ues.push_back(std::move(ue));
    }
    return ds;
}

} // namespace nextsense::runner
