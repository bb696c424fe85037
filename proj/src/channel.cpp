// SPDX-License-Identifier: Apache-2.0

#include "nextsense/channel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "embedded_data.hpp"

namespace nextsense::channel {

namespace {

double db_to_linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool parse_number(std::string_view token, double& out)
{
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

// Shared by frequency_response and the emulator so both produce bit-identical
// responses for the same gains.
std::vector<cplx> steering_table(std::span<const Tap> taps, std::size_t num_subcarriers, double df_hz)
{
    std::vector<cplx> table(taps.size() * num_subcarriers);
    for (std::size_t l = 0; l < taps.size(); ++l) {
        const double tau = taps[l].delay_ns * 1e-9;
        for (std::size_t k = 0; k < num_subcarriers; ++k) {
            const double angle = -2.0 * kPi * static_cast<double>(k) * df_hz * tau;
            table[l * num_subcarriers + k] = std::polar(1.0, angle);
        }
    }
    return table;
}

std::vector<double> tap_amplitudes(std::span<const Tap> taps)
{
    std::vector<double> amp(taps.size());
    for (std::size_t l = 0; l < taps.size(); ++l) {
        amp[l] = std::sqrt(db_to_linear(taps[l].power_db));
    }
    return amp;
}

void accumulate_response(std::span<const cplx> steering, std::span<const double> amplitude,
                         std::span<const cplx> gains, double scale, std::span<cplx> out)
{
    const std::size_t k_count = out.size();
    std::fill(out.begin(), out.end(), cplx{});
    for (std::size_t l = 0; l < gains.size(); ++l) {
        const cplx weight = gains[l] * amplitude[l];
        const cplx* row = steering.data() + l * k_count;
        for (std::size_t k = 0; k < k_count; ++k) {
            out[k] += weight * row[k];
        }
    }
    if (scale != 1.0) {
        for (auto& v : out) {
            v *= scale;
        }
    }
}

std::vector<double> correlation_cholesky(std::size_t ports, MimoCorrelation level)
{
    const double alpha = correlation_alpha(level);
    std::vector<double> r(ports * ports);
    for (std::size_t i = 0; i < ports; ++i) {
        for (std::size_t j = 0; j < ports; ++j) {
            if (i == j) {
                r[i * ports + j] = 1.0;
            } else {
                const double e = static_cast<double>(i > j ? i - j : j - i) / static_cast<double>(ports - 1);
                r[i * ports + j] = std::pow(alpha, e * e);
            }
        }
    }
    std::vector<double> l(ports * ports, 0.0);
    for (std::size_t i = 0; i < ports; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = r[i * ports + j];
            for (std::size_t p = 0; p < j; ++p) {
                sum -= l[i * ports + p] * l[j * ports + p];
            }
            if (i == j) {
                l[i * ports + i] = std::sqrt(std::max(sum, 0.0));
            } else {
                const double d = l[j * ports + j];
                l[i * ports + j] = d > 0.0 ? sum / d : 0.0;
            }
        }
    }
    return l;
}

std::vector<Tap> parse_table(std::string_view text, std::string_view name)
{
    return parse_tap_file(text, name);
}

} // namespace

std::string_view to_string(MimoCorrelation c)
{
    switch (c) {
    case MimoCorrelation::low:
        return "low";
    case MimoCorrelation::medium:
        return "medium";
    case MimoCorrelation::high:
        return "high";
    }
    return "low";
}

MimoCorrelation parse_mimo_correlation(std::string_view s)
{
    const std::string v = to_lower(s);
    if (v == "low") {
        return MimoCorrelation::low;
    }
    if (v == "medium") {
        return MimoCorrelation::medium;
    }
    if (v == "high") {
        return MimoCorrelation::high;
    }
    throw ValidationError("unknown MIMO correlation level '" + std::string(s) + "'");
}

double correlation_alpha(MimoCorrelation c)
{
    switch (c) {
    case MimoCorrelation::low:
        return 0.0;
    case MimoCorrelation::medium:
        return 0.3;
    case MimoCorrelation::high:
        return 0.9;
    }
    return 0.0;
}

void ChannelScenario::validate() const
{
    if (taps.empty()) {
        throw ValidationError("channel scenario needs at least one tap");
    }
    for (std::size_t i = 0; i < taps.size(); ++i) {
        const Tap& t = taps[i];
        const std::string where = "tap " + std::to_string(i) + ": ";
        if (!std::isfinite(t.delay_ns) || t.delay_ns < 0.0) {
            throw ValidationError(where + "delay must be finite and >= 0");
        }
        if (!std::isfinite(t.doppler_hz) || t.doppler_hz < 0.0) {
            throw ValidationError(where + "doppler must be finite and >= 0");
        }
        if (!std::isfinite(t.power_db)) {
            throw ValidationError(where + "power must be finite");
        }
    }
    if (num_ports < 1 || num_ports > 8) {
        throw ValidationError("num_ports must be in [1, 8]");
    }
    if (std::isnan(noise_spectral_density_dbm_hz) ||
        noise_spectral_density_dbm_hz == std::numeric_limits<double>::infinity()) {
        throw ValidationError("noise spectral density must be finite or -inf (disabled)");
    }
    if (!std::isfinite(path_loss_a_db) || !std::isfinite(path_loss_b_db)) {
        throw ValidationError("path loss coefficients must be finite");
    }
    if (normalize_power) {
        double total = 0.0;
        for (const Tap& t : taps) {
            total += db_to_linear(t.power_db);
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ValidationError("normalize_power is set but linear tap powers sum to " + std::to_string(total));
        }
    }
}

std::vector<Tap> normalize_tap_powers(std::vector<Tap> taps)
{
    if (taps.empty()) {
        throw ValidationError("cannot normalize an empty tap list");
    }
    double total = 0.0;
    for (const Tap& t : taps) {
        total += db_to_linear(t.power_db);
    }
    const double offset = 10.0 * std::log10(total);
    for (Tap& t : taps) {
        t.power_db -= offset;
    }
    return taps;
}

ChannelScenario normalized(ChannelScenario scenario)
{
    scenario.taps = normalize_tap_powers(std::move(scenario.taps));
    scenario.normalize_power = true;
    return scenario;
}

// ---------------------------------------------------------------------------

const std::vector<Tap>& tdl_table(TdlProfile profile)
{
    static const std::vector<Tap> a = parse_table(data::kTdlaTable, "tdla.taps");
    static const std::vector<Tap> b = parse_table(data::kTdlbTable, "tdlb.taps");
    static const std::vector<Tap> c = parse_table(data::kTdlcTable, "tdlc.taps");
    switch (profile) {
    case TdlProfile::tdla:
        return a;
    case TdlProfile::tdlb:
        return b;
    case TdlProfile::tdlc:
        return c;
    case TdlProfile::custom:
        break;
    }
    throw ValidationError("the custom profile has no built-in table");
}

std::vector<Tap> load_custom_preset(std::span<const Tap> normalized_table, double delay_spread_ns)
{
    if (!std::isfinite(delay_spread_ns) || delay_spread_ns <= 0.0) {
        throw ValidationError("delay spread must be > 0 ns");
    }
    if (normalized_table.empty()) {
        throw ValidationError("custom tap table is empty");
    }
    std::vector<Tap> taps(normalized_table.begin(), normalized_table.end());
    for (Tap& t : taps) {
        t.delay_ns *= delay_spread_ns;
    }
    return taps;
}

std::vector<Tap> load_tdl_preset(std::string_view name, std::optional<double> delay_spread_ns, double doppler_hz)
{
    const std::string lower = to_lower(name);
    if (lower == "custom") {
        throw ValidationError("preset 'custom' needs a caller-supplied table (load_custom_preset)");
    }
    if (lower.size() < 4 || lower.compare(0, 3, "tdl") != 0) {
        throw ValidationError("unknown TDL preset '" + std::string(name) + "'");
    }
    TdlProfile profile;
    switch (lower[3]) {
    case 'a':
        profile = TdlProfile::tdla;
        break;
    case 'b':
        profile = TdlProfile::tdlb;
        break;
    case 'c':
        profile = TdlProfile::tdlc;
        break;
    default:
        throw ValidationError("unknown TDL preset '" + std::string(name) + "'");
    }
    std::optional<double> spread = delay_spread_ns;
    const std::string_view suffix = std::string_view(lower).substr(4);
    if (!suffix.empty()) {
        double encoded = 0.0;
        if (!parse_number(suffix, encoded)) {
            throw ValidationError("unknown TDL preset '" + std::string(name) + "'");
        }
        if (!spread) {
            spread = encoded;
        }
    }
    if (!spread) {
        throw ValidationError("preset '" + std::string(name) + "' needs an explicit delay spread");
    }
    if (!std::isfinite(doppler_hz) || doppler_hz < 0.0) {
        throw ValidationError("doppler must be >= 0 Hz");
    }
    auto taps = load_custom_preset(tdl_table(profile), *spread);
    for (Tap& t : taps) {
        t.doppler_hz = doppler_hz;
    }
    return taps;
}

// ---------------------------------------------------------------------------

FadingProcess::FadingProcess(std::span<const Tap> taps, std::uint64_t seed, std::size_t num_ports,
                             MimoCorrelation correlation)
    : taps_(taps.begin(), taps.end()), ports_(num_ports), doppler_phase_(taps.size(), 0.0)
{
    if (num_ports < 1) {
        throw ValidationError("fading process needs at least one port");
    }
    RandomSource rng(derive_seed(seed, "fading"));
    branches_.resize(taps_.size() * ports_);
    constexpr double m = static_cast<double>(kSinusoids);
    for (Branch& b : branches_) {
        const double rotation = rng.uniform(-kPi, kPi);
        for (std::size_t n = 0; n < kSinusoids; ++n) {
            const double angle = (2.0 * kPi * static_cast<double>(n + 1) - kPi + rotation) / (4.0 * m);
            b.cos_angle[n] = std::cos(angle);
            b.sin_angle[n] = std::sin(angle);
            b.phase_i[n] = rng.uniform(-kPi, kPi);
            b.phase_q[n] = rng.uniform(-kPi, kPi);
        }
    }
    coloring_ = correlation_cholesky(ports_, correlation);
}

void FadingProcess::advance(double dt)
{
    if (!(dt >= 0.0) || !std::isfinite(dt)) {
        throw ValidationError("fading process can only move forward in time");
    }
    for (std::size_t l = 0; l < taps_.size(); ++l) {
        doppler_phase_[l] += 2.0 * kPi * taps_[l].doppler_hz * dt;
    }
    time_ += dt;
}

void FadingProcess::set_mobility_doppler(double hz)
{
    if (!std::isfinite(hz) || hz < 0.0) {
        throw ValidationError("mobility doppler must be >= 0 Hz");
    }
    for (Tap& t : taps_) {
        if (t.doppler_from_mobility) {
            t.doppler_hz = hz;
        }
    }
}

cplx FadingProcess::branch_gain(const Branch& b, double doppler_phase) const
{
    double gi = 0.0;
    double gq = 0.0;
    for (std::size_t n = 0; n < kSinusoids; ++n) {
        gi += std::cos(doppler_phase * b.cos_angle[n] + b.phase_i[n]);
        gq += std::cos(doppler_phase * b.sin_angle[n] + b.phase_q[n]);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(kSinusoids));
    return {gi * scale, gq * scale};
}

cplx FadingProcess::gain(std::size_t tap, std::size_t port) const
{
    if (taps_[tap].is_static()) {
        return {1.0, 0.0};
    }
    cplx g{};
    for (std::size_t q = 0; q <= port; ++q) {
        const double c = coloring_[port * ports_ + q];
        if (c != 0.0) {
            g += c * branch_gain(branches_[tap * ports_ + q], doppler_phase_[tap]);
        }
    }
    return g;
}

std::vector<cplx> FadingProcess::gains(std::size_t port) const
{
    std::vector<cplx> out(taps_.size());
    for (std::size_t l = 0; l < taps_.size(); ++l) {
        out[l] = gain(l, port);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<cplx> frequency_response(const ChannelScenario& scenario, std::span<const cplx> fading_gains,
                                     const GridDims& dims)
{
    if (fading_gains.size() != scenario.taps.size()) {
        throw ValidationError("frequency_response: need one fading gain per tap");
    }
    const auto steering = steering_table(scenario.taps, dims.num_subcarriers, dims.subcarrier_spacing_hz());
    const auto amplitude = tap_amplitudes(scenario.taps);
    std::vector<cplx> h(dims.num_subcarriers);
    accumulate_response(steering, amplitude, fading_gains, 1.0, h);
    return h;
}

ChannelEmulator::ChannelEmulator(ChannelScenario scenario, std::size_t num_subcarriers, std::size_t num_symbols,
                                 double subcarrier_spacing_khz)
    : scenario_(std::move(scenario)),
      k_(num_subcarriers),
      s_(num_symbols),
      df_hz_(subcarrier_spacing_khz * 1e3),
      fading_(scenario_.taps, scenario_.seed, scenario_.num_ports, scenario_.mimo_correlation),
      noise_(derive_seed(scenario_.seed, "noise"))
{
    scenario_.validate();
    steering_ = steering_table(scenario_.taps, k_, df_hz_);
    amplitude_ = tap_amplitudes(scenario_.taps);
    if (scenario_.noise_enabled()) {
        // mW/Hz * Hz, relative to the 0 dBm transmit grid
        noise_variance_ = db_to_linear(scenario_.noise_spectral_density_dbm_hz) * df_hz_;
    }
}

std::vector<std::vector<cplx>> ChannelEmulator::apply_snapshot(const waveform::ReferenceSignal& x, double time_s,
                                                               double large_scale_gain_db,
                                                               std::span<const std::span<cplx>> port_blocks)
{
    if (x.num_subcarriers != k_ || x.num_symbols != s_) {
        throw ValidationError("reference grid does not match emulator dimensions");
    }
    if (port_blocks.size() != scenario_.num_ports) {
        throw ValidationError("need one output block per receive port");
    }
    if (!std::isfinite(time_s) || time_s < fading_.time() || (started_ && time_s == fading_.time())) {
        throw ValidationError("snapshot times must be strictly increasing and >= 0");
    }
    fading_.advance(time_s - fading_.time());
    started_ = true;

    const double scale = std::pow(10.0, large_scale_gain_db / 20.0);
    std::vector<std::vector<cplx>> responses(scenario_.num_ports);
    for (std::size_t p = 0; p < scenario_.num_ports; ++p) {
        auto block = port_blocks[p];
        if (block.size() != k_ * s_) {
            throw ValidationError("output block must hold K*S samples");
        }
        auto& h = responses[p];
        h.resize(k_);
        const auto g = fading_.gains(p);
        accumulate_response(steering_, amplitude_, g, scale, h);
        for (std::size_t s = 0; s < s_; ++s) {
            for (std::size_t k = 0; k < k_; ++k) {
                cplx y = h[k] * x.values[s * k_ + k];
                if (noise_variance_ > 0.0) {
                    y += noise_.complex_normal(noise_variance_);
                }
                block[s * k_ + k] = y;
            }
        }
    }
    return responses;
}

std::vector<cplx> ChannelEmulator::apply_snapshot(const waveform::ReferenceSignal& x, double time_s,
                                                  double large_scale_gain_db, std::span<cplx> block)
{
    if (scenario_.num_ports != 1) {
        throw ValidationError("single-port apply_snapshot on a multi-port scenario");
    }
    const std::span<cplx> blocks[1] = {block};
    return std::move(apply_snapshot(x, time_s, large_scale_gain_db, blocks).front());
}

std::vector<IQTensor> apply_channel_ports(const waveform::ReferenceSignal& x, const ChannelScenario& scenario,
                                          std::span<const double> snapshot_times)
{
    if (snapshot_times.empty()) {
        throw ValidationError("apply_channel needs at least one snapshot time");
    }
    for (std::size_t i = 1; i < snapshot_times.size(); ++i) {
        if (!(snapshot_times[i] > snapshot_times[i - 1])) {
            throw ValidationError("snapshot times must be strictly increasing");
        }
    }
    ChannelEmulator emulator(scenario, x.num_subcarriers, x.num_symbols, x.subcarrier_spacing_khz);
    std::vector<IQTensor> out(scenario.num_ports,
                              IQTensor(x.num_subcarriers, x.num_symbols, snapshot_times.size()));
    std::vector<std::span<cplx>> blocks(scenario.num_ports);
    for (std::size_t n = 0; n < snapshot_times.size(); ++n) {
        for (std::size_t p = 0; p < scenario.num_ports; ++p) {
            blocks[p] = out[p].snapshot(n);
        }
        emulator.apply_snapshot(x, snapshot_times[n], 0.0, blocks);
    }
    return out;
}

IQTensor apply_channel(const waveform::ReferenceSignal& x, const ChannelScenario& scenario,
                       std::span<const double> snapshot_times)
{
    return std::move(apply_channel_ports(x, scenario, snapshot_times).front());
}

std::vector<double> uniform_times(std::size_t n, double interval, double start)
{
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = start + static_cast<double>(i + 1) * interval;
    }
    return t;
}

double path_loss_db(double a_db, double b_db_per_decade, double distance_m)
{
    if (!(distance_m > 0.0)) {
        throw ValidationError("path loss distance must be > 0 m");
    }
    return a_db + b_db_per_decade * std::log10(distance_m);
}

double bessel_j0(double x)
{
    x = std::abs(x);
    if (x <= 8.0) {
        // power series, sum_k (-1)^k (x/2)^(2k) / (k!)^2
        const double q = -(x * x) / 4.0;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 80; ++k) {
            term *= q / (static_cast<double>(k) * static_cast<double>(k));
            sum += term;
            if (std::abs(term) < 1e-18) {
                break;
            }
        }
        return sum;
    }
    // (1/pi) int_0^pi cos(x sin t) dt; the trapezoid rule converges
    // geometrically for this periodic integrand once panels exceed x.
    const int panels = 64 + 2 * static_cast<int>(std::ceil(x));
    const double h = kPi / panels;
    double sum = 0.5 * (std::cos(0.0) + std::cos(x * std::sin(kPi)));
    for (int i = 1; i < panels; ++i) {
        sum += std::cos(x * std::sin(i * h));
    }
    return sum * h / kPi;
}

double fading_autocorrelation_oracle(double doppler_hz, double lag_s)
{
    if (!(doppler_hz >= 0.0)) {
        throw ValidationError("doppler must be >= 0 Hz");
    }
    return bessel_j0(2.0 * kPi * doppler_hz * lag_s);
}

// ---------------------------------------------------------------------------

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw ValidationError("cannot format number");
    }
    return std::string(buf, ptr);
}

std::vector<Tap> parse_tap_file(std::string_view text, std::string_view source)
{
    std::vector<Tap> taps;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t i = first;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
                ++i;
            }
            if (i >= line.size()) {
                break;
            }
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') {
                ++j;
            }
            fields.push_back(line.substr(i, j - i));
            i = j;
        }
        const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
        if (fields.size() != 3) {
            throw ValidationError(where + "expected 3 fields 'delay_ns power_db doppler_hz', got " +
                                  std::to_string(fields.size()));
        }
        Tap tap;
        if (!parse_number(fields[0], tap.delay_ns) || !parse_number(fields[1], tap.power_db)) {
            throw ValidationError(where + "malformed number");
        }
        if (fields[2] == "from-mobility") {
            tap.doppler_from_mobility = true;
        } else if (!parse_number(fields[2], tap.doppler_hz)) {
            throw ValidationError(where + "malformed number");
        }
        if (!(tap.delay_ns >= 0.0) || !(tap.doppler_hz >= 0.0) || !std::isfinite(tap.power_db) ||
            !std::isfinite(tap.delay_ns) || !std::isfinite(tap.doppler_hz)) {
            throw ValidationError(where + "delay and doppler must be finite and >= 0");
        }
        taps.push_back(tap);
        if (end == text.size()) {
            break;
        }
    }
    return taps;
}

std::string format_tap_file(std::span<const Tap> taps, std::string_view comment)
{
    std::ostringstream out;
    if (!comment.empty()) {
        std::string_view rest = comment;
        while (!rest.empty()) {
            const auto nl = rest.find('\n');
            out << "# " << rest.substr(0, nl) << '\n';
            if (nl == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(nl + 1);
        }
    }
    out << "# delay_ns power_db doppler_hz\n";
    for (const Tap& t : taps) {
        out << format_double(t.delay_ns) << ' ' << format_double(t.power_db) << ' '
            << (t.doppler_from_mobility ? std::string("from-mobility") : format_double(t.doppler_hz)) << '\n';
    }
    return out.str();
}

std::vector<Tap> read_tap_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open tap file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_tap_file(buf.str(), path.string());
}

void write_tap_file(const std::filesystem::path& path, std::span<const Tap> taps, std::string_view comment)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write tap file " + path.string());
    }
    out << format_tap_file(taps, comment);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace nextsense::channel
