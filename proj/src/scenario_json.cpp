// SPDX-License-Identifier: Apache-2.0

#include "nextsense/scenario_json.hpp"

#include <cmath>

namespace nextsense::scenario {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v)
{
    return json::array({v[0], v[1], v[2]});
}

class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            fail("", "expected an object");
        }
    }

    [[noreturn]] void fail(std::string_view key, std::string_view what) const
    {
        std::string where = path_;
        if (!key.empty()) {
            where += where.empty() ? std::string(key) : "." + std::string(key);
        }
        throw SpecParseError((where.empty() ? std::string("document") : where) + ": " + std::string(what));
    }

    std::string child(std::string_view key) const
    {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    const json* find(std::string_view key) const
    {
        auto it = obj_.find(std::string(key));
        if (it == obj_.end() || it->is_null()) {
            return nullptr;
        }
        return &*it;
    }

    bool has_null(std::string_view key) const
    {
        auto it = obj_.find(std::string(key));
        return it != obj_.end() && it->is_null();
    }

    double number(std::string_view key, double fallback) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number()) {
            fail(key, "expected a number");
        }
        return v->get<double>();
    }

    std::optional<double> optional_number(std::string_view key) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return std::nullopt;
        }
        if (!v->is_number()) {
            fail(key, "expected a number or null");
        }
        return v->get<double>();
    }

    int integer(std::string_view key, int fallback) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number_integer()) {
            fail(key, "expected an integer");
        }
        return v->get<int>();
    }

    std::uint64_t unsigned_integer(std::string_view key, std::uint64_t fallback) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
            fail(key, "expected a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    std::size_t count(std::string_view key, std::size_t fallback) const
    {
        return static_cast<std::size_t>(unsigned_integer(key, fallback));
    }

    bool boolean(std::string_view key, bool fallback) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_boolean()) {
            fail(key, "expected true or false");
        }
        return v->get<bool>();
    }

    std::string string(std::string_view key, std::string fallback) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_string()) {
            fail(key, "expected a string");
        }
        return v->get<std::string>();
    }

    Vec3 vec3(std::string_view key, const Vec3& fallback) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        return parse_vec(*v, child(key));
    }

    static Vec3 parse_vec(const json& v, const std::string& path)
    {
        if (!v.is_array() || v.size() != 3) {
            throw SpecParseError(path + ": expected [x, y, z]");
        }
        Vec3 out{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!v[i].is_number()) {
                throw SpecParseError(path + ": expected [x, y, z]");
            }
            out[i] = v[i].get<double>();
        }
        return out;
    }

    template <typename Enum, typename Parse>
    Enum enumeration(std::string_view key, Enum fallback, Parse parse) const
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_string()) {
            fail(key, "expected a string");
        }
        const auto s = v->get<std::string>();
        if (auto e = parse(s)) {
            return *e;
        }
        fail(key, "unknown value '" + s + "'");
    }

    const json& raw() const { return obj_; }
    const std::string& path() const { return path_; }

private:
    const json& obj_;
    std::string path_;
};

std::optional<Verbosity> parse_verbosity(const std::string& s)
{
    if (s == "off") {
        return Verbosity::off;
    }
    if (s == "summary") {
        return Verbosity::summary;
    }
    if (s == "full") {
        return Verbosity::full;
    }
    return std::nullopt;
}

std::optional<MobilityKind> parse_mobility(const std::string& s)
{
    if (s == "static") {
        return MobilityKind::fixed;
    }
    if (s == "linear_bounce") {
        return MobilityKind::linear_bounce;
    }
    if (s == "waypoint") {
        return MobilityKind::waypoint;
    }
    return std::nullopt;
}

std::optional<TrafficKind> parse_traffic(const std::string& s)
{
    if (s == "none") {
        return TrafficKind::none;
    }
    if (s == "periodic_ssb_only") {
        return TrafficKind::periodic_ssb_only;
    }
    if (s == "cbr") {
        return TrafficKind::cbr;
    }
    return std::nullopt;
}

std::optional<Rat> parse_rat(const std::string& s)
{
    if (s == "nr") {
        return Rat::nr;
    }
    if (s == "lte") {
        return Rat::lte;
    }
    return std::nullopt;
}

std::optional<AntennaType> parse_antenna(const std::string& s)
{
    if (s == "isotropic") {
        return AntennaType::isotropic;
    }
    if (s == "sector") {
        return AntennaType::sector;
    }
    return std::nullopt;
}

std::optional<channel::MimoCorrelation> parse_mimo(const std::string& s)
{
    try {
        return channel::parse_mimo_correlation(s);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

channel::Tap tap_from_json(const json& j, const std::string& path)
{
    Reader r(j, path);
    channel::Tap t;
    t.delay_ns = r.number("delay_ns", 0.0);
    t.power_db = r.number("power_db", 0.0);
    if (const json* d = r.find("doppler_hz"); d != nullptr && d->is_string()) {
        if (d->get<std::string>() != "from-mobility") {
            r.fail("doppler_hz", "expected a number or \"from-mobility\"");
        }
        t.doppler_from_mobility = true;
    } else {
        t.doppler_hz = r.number("doppler_hz", 0.0);
    }
    return t;
}

ChannelConfig channel_from_json(const json& j, const std::string& path)
{
    ChannelConfig c;
    if (j.is_string()) {
        c.preset = j.get<std::string>();
        return c;
    }
    Reader r(j, path);
    c.preset = r.string("preset", c.preset);
    c.delay_spread_ns = r.optional_number("delay_spread");
    if (const json* d = r.find("doppler"); d != nullptr && d->is_string()) {
        if (d->get<std::string>() != "from-mobility") {
            r.fail("doppler", "expected a number or \"from-mobility\"");
        }
        c.doppler_from_mobility = true;
    } else {
        c.doppler_hz = r.number("doppler", 0.0);
    }
    if (const json* taps = r.find("taps")) {
        if (!taps->is_array()) {
            r.fail("taps", "expected an array");
        }
        for (std::size_t i = 0; i < taps->size(); ++i) {
            c.taps.push_back(tap_from_json((*taps)[i], r.child("taps") + "[" + std::to_string(i) + "]"));
        }
    }
    c.mimo_correlation = r.enumeration("mimo_correlation", c.mimo_correlation, parse_mimo);
    c.num_ports = r.count("num_ports", c.num_ports);
    if (r.has_null("noise_spectral_density")) {
        c.noise_spectral_density_dbm_hz = channel::kNoiseDisabled;
    } else {
        c.noise_spectral_density_dbm_hz = r.number("noise_spectral_density", c.noise_spectral_density_dbm_hz);
    }
    c.path_loss_a_db = r.number("path_loss_a", c.path_loss_a_db);
    c.path_loss_b_db = r.number("path_loss_b", c.path_loss_b_db);
    c.normalize_power = r.boolean("normalize_power", c.normalize_power);
    if (r.find("seed") != nullptr) {
        c.seed = r.unsigned_integer("seed", 0);
    }
    return c;
}

UESpec ue_from_json(const json& j, const std::string& path, std::size_t index)
{
    Reader r(j, path);
    UESpec ue;
    ue.id = r.string("id", "ue" + std::to_string(index));
    ue.initial_position = r.vec3("initial_position", ue.initial_position);
    ue.speed_mps = r.number("speed", ue.speed_mps);
    ue.direction_deg = r.number("direction", ue.direction_deg);
    ue.elevation_deg = r.number("elevation", ue.elevation_deg);
    if (const json* area = r.find("mobility_area")) {
        Reader a(*area, r.child("mobility_area"));
        ue.mobility_area.min = a.vec3("min", ue.mobility_area.min);
        ue.mobility_area.max = a.vec3("max", ue.mobility_area.max);
    }
    ue.mobility.kind = r.enumeration("mobility_logic", ue.mobility.kind, parse_mobility);
    if (const json* wps = r.find("waypoints")) {
        if (!wps->is_array()) {
            r.fail("waypoints", "expected an array");
        }
        for (std::size_t i = 0; i < wps->size(); ++i) {
            ue.mobility.waypoints.push_back(
                Reader::parse_vec((*wps)[i], r.child("waypoints") + "[" + std::to_string(i) + "]"));
        }
    }
    ue.traffic.kind = r.enumeration("traffic_profile", ue.traffic.kind, parse_traffic);
    ue.traffic.cbr_rate_kbps = r.number("cbr_rate_kbps", ue.traffic.cbr_rate_kbps);
    if (const json* ch = r.find("channel")) {
        ue.channel = channel_from_json(*ch, r.child("channel"));
    }
    return ue;
}

json ue_json(const UESpec& ue)
{
    const ChannelConfig& c = ue.channel;
    json ch = {
        {"preset", c.preset},
        {"delay_spread", c.delay_spread_ns ? json(*c.delay_spread_ns) : json(nullptr)},
        {"doppler", c.doppler_from_mobility ? json("from-mobility") : json(c.doppler_hz)},
        {"mimo_correlation", std::string(channel::to_string(c.mimo_correlation))},
        {"num_ports", c.num_ports},
        {"noise_spectral_density",
         c.noise_spectral_density_dbm_hz == channel::kNoiseDisabled ? json(nullptr)
                                                                     : json(c.noise_spectral_density_dbm_hz)},
        {"path_loss_a", c.path_loss_a_db},
        {"path_loss_b", c.path_loss_b_db},
        {"normalize_power", c.normalize_power},
        {"seed", c.seed ? json(*c.seed) : json(nullptr)},
    };
    json taps = json::array();
    for (const auto& t : c.taps) {
        taps.push_back(to_json(t));
    }
    ch["taps"] = taps;
    json wps = json::array();
    for (const auto& w : ue.mobility.waypoints) {
        wps.push_back(vec_json(w));
    }
    return {
        {"id", ue.id},
        {"initial_position", vec_json(ue.initial_position)},
        {"speed", ue.speed_mps},
        {"direction", ue.direction_deg},
        {"elevation", ue.elevation_deg},
        {"mobility_area", {{"min", vec_json(ue.mobility_area.min)}, {"max", vec_json(ue.mobility_area.max)}}},
        {"mobility_logic", std::string(to_string(ue.mobility.kind))},
        {"waypoints", wps},
        {"traffic_profile", std::string(to_string(ue.traffic.kind))},
        {"cbr_rate_kbps", ue.traffic.cbr_rate_kbps},
        {"channel", ch},
    };
}

} // namespace

json to_json(const channel::Tap& tap)
{
    return {{"delay_ns", tap.delay_ns},
            {"power_db", tap.power_db},
            {"doppler_hz", tap.doppler_from_mobility ? json("from-mobility") : json(tap.doppler_hz)}};
}

json to_json(const ExperimentSpec& spec)
{
    const RadioConfig& r = spec.radio;
    json ues = json::array();
    for (const auto& ue : spec.ues) {
        ues.push_back(ue_json(ue));
    }
    return {
        {"format_version", kSpecFormatVersion},
        {"name", spec.name},
        {"seed", spec.seed},
        {"duration", spec.duration_s},
        {"snapshot_interval", spec.snapshot_interval_s},
        {"radio",
         {
             {"rat", std::string(to_string(r.rat))},
             {"num_cells", r.num_cells},
             {"carrier_frequency", r.carrier_frequency_mhz},
             {"bandwidth", r.bandwidth_mhz},
             {"subcarrier_spacing", r.subcarrier_spacing_khz},
             {"tx_power", r.tx_power_dbm},
             {"num_dl_antennas", r.num_dl_antennas},
             {"num_ul_antennas", r.num_ul_antennas},
             {"max_mcs", r.max_mcs},
             {"rx_tx_latency", r.rx_tx_latency_slots},
             {"antenna_position", vec_json(r.antenna_position)},
             {"antenna_type", std::string(to_string(r.antenna_type))},
             {"antenna_azimuth", r.antenna_azimuth_deg},
         }},
        {"capture",
         {
             {"num_subcarriers", spec.capture.num_subcarriers},
             {"num_symbols", spec.capture.num_symbols},
             {"reference_seed", spec.capture.reference_seed},
         }},
        {"log_verbosity",
         {
             {"phy", std::string(to_string(spec.log_verbosity.phy))},
             {"mac", std::string(to_string(spec.log_verbosity.mac))},
             {"rrc", std::string(to_string(spec.log_verbosity.rrc))},
             {"nas", std::string(to_string(spec.log_verbosity.nas))},
         }},
        {"ues", ues},
    };
}

ExperimentSpec spec_from_json(const json& doc)
{
    Reader r(doc, "");
    const int version = r.integer("format_version", kSpecFormatVersion);
    if (version != kSpecFormatVersion) {
        r.fail("format_version", "unsupported format version " + std::to_string(version));
    }
    ExperimentSpec spec;
    spec.name = r.string("name", spec.name);
    spec.seed = r.unsigned_integer("seed", spec.seed);
    spec.duration_s = r.number("duration", spec.duration_s);
    spec.snapshot_interval_s = r.number("snapshot_interval", spec.snapshot_interval_s);
    if (const json* radio = r.find("radio")) {
        Reader rr(*radio, "radio");
        RadioConfig& c = spec.radio;
        c.rat = rr.enumeration("rat", c.rat, parse_rat);
        c.num_cells = rr.integer("num_cells", c.num_cells);
        c.carrier_frequency_mhz = rr.number("carrier_frequency", c.carrier_frequency_mhz);
        c.bandwidth_mhz = rr.number("bandwidth", c.bandwidth_mhz);
        c.subcarrier_spacing_khz = rr.number("subcarrier_spacing", c.subcarrier_spacing_khz);
        c.tx_power_dbm = rr.number("tx_power", c.tx_power_dbm);
        c.num_dl_antennas = rr.integer("num_dl_antennas", c.num_dl_antennas);
        c.num_ul_antennas = rr.integer("num_ul_antennas", c.num_ul_antennas);
        c.max_mcs = rr.integer("max_mcs", c.max_mcs);
        c.rx_tx_latency_slots = rr.integer("rx_tx_latency", c.rx_tx_latency_slots);
        c.antenna_position = rr.vec3("antenna_position", c.antenna_position);
        c.antenna_type = rr.enumeration("antenna_type", c.antenna_type, parse_antenna);
        c.antenna_azimuth_deg = rr.number("antenna_azimuth", c.antenna_azimuth_deg);
    }
    if (const json* cap = r.find("capture")) {
        Reader rc(*cap, "capture");
        spec.capture.num_subcarriers = rc.count("num_subcarriers", spec.capture.num_subcarriers);
        spec.capture.num_symbols = rc.count("num_symbols", spec.capture.num_symbols);
        spec.capture.reference_seed = rc.unsigned_integer("reference_seed", spec.capture.reference_seed);
    }
    if (const json* lv = r.find("log_verbosity")) {
        Reader rl(*lv, "log_verbosity");
        spec.log_verbosity.phy = rl.enumeration("phy", spec.log_verbosity.phy, parse_verbosity);
        spec.log_verbosity.mac = rl.enumeration("mac", spec.log_verbosity.mac, parse_verbosity);
        spec.log_verbosity.rrc = rl.enumeration("rrc", spec.log_verbosity.rrc, parse_verbosity);
        spec.log_verbosity.nas = rl.enumeration("nas", spec.log_verbosity.nas, parse_verbosity);
    }
    if (const json* ues = r.find("ues")) {
        if (!ues->is_array()) {
            r.fail("ues", "expected an array");
        }
        for (std::size_t i = 0; i < ues->size(); ++i) {
            spec.ues.push_back(ue_from_json((*ues)[i], "ues[" + std::to_string(i) + "]", i));
        }
    }
    return spec;
}

ExperimentSpec parse_spec(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SpecParseError(std::string("malformed JSON: ") + e.what());
    }
    return spec_from_json(doc);
}

std::string dump_spec(const ExperimentSpec& spec, int indent)
{
    return to_json(spec).dump(indent);
}

json to_json(const std::vector<Violation>& violations)
{
    json out = json::array();
    for (const auto& v : violations) {
        out.push_back({{"path", v.path}, {"reason", v.reason}});
    }
    return out;
}

json preview_json(const ExperimentSpec& spec)
{
    json ues = json::array();
    for (const auto& ue : spec.ues) {
        json samples = json::array();
        for (const auto& s : trajectory(ue, spec.duration_s, spec.snapshot_interval_s)) {
            samples.push_back({{"t", s.time_s}, {"position", vec_json(s.position)}});
        }
        ues.push_back({{"id", ue.id},
                       {"mobility_logic", std::string(to_string(ue.mobility.kind))},
                       {"mobility_area", {{"min", vec_json(ue.mobility_area.min)},
                                          {"max", vec_json(ue.mobility_area.max)}}},
                       {"samples", samples}});
    }
    return {{"format_version", kSpecFormatVersion}, {"ues", ues}};
}

} // namespace nextsense::scenario
