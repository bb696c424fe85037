// SPDX-License-Identifier: Apache-2.0

#include "nextsense/api.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "nextsense/digest.hpp"
#include "nextsense/estimation.hpp"
#include "nextsense/runner.hpp"
#include "nextsense/scenario_json.hpp"
#include "nextsense/validation.hpp"

namespace nextsense::api {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kExecutionShare = 0.95; // remainder: dataset + derived artifacts

struct Interrupted {};

std::string lowercase(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> path_segments(const std::string& path)
{
    std::vector<std::string> out;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '/')) {
        if (!part.empty()) {
            out.push_back(part);
        }
    }
    return out;
}

json error_body(const std::string& message, const json& details = json::object())
{
    json body = {{"format_version", kApiFormatVersion}, {"error", message}};
    for (auto it = details.begin(); it != details.end(); ++it) {
        body[it.key()] = it.value();
    }
    return body;
}

HttpResponse json_response(int status, const json& body)
{
    return {status, "application/json", body.dump(2)};
}

std::optional<RunState> parse_state(const std::string& s)
{
    for (auto st : {RunState::queued, RunState::running, RunState::completed, RunState::failed}) {
        if (to_string(st) == s) {
            return st;
        }
    }
    return std::nullopt;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ApiError(404, "artifact not found: " + path.filename().string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json violations_from_parse_error(const std::string& what)
{
    const auto colon = what.find(": ");
    if (colon == std::string::npos) {
        return json::array({{{"path", ""}, {"reason", what}}});
    }
    return json::array({{{"path", what.substr(0, colon)}, {"reason", what.substr(colon + 2)}}});
}

std::size_t parse_ue_index(const HttpRequest& req)
{
    const auto v = req.query_value("ue");
    if (!v) {
        return 0;
    }
    try {
        std::size_t used = 0;
        const unsigned long n = std::stoul(*v, &used);
        if (used != v->size()) {
            throw std::invalid_argument("trailing characters");
        }
        return n;
    } catch (const std::exception&) {
        throw ApiError(400, "query parameter 'ue' must be a non-negative integer");
    }
}

// Summary of one UE's capture stored next to the dataset.
json ue_stats(const runner::UEDataset& ue, const waveform::ReferenceSignal& x, std::size_t index)
{
    const IQTensor normalized = validation::power_normalize(ue.iq);
    const std::size_t max_lag = std::min(validation::kDefaultMaxLag, ue.iq.snapshots() - 1);
    const auto h_hat = estimation::estimate_freq_channel(ue.iq, x);
    const auto pdp = estimation::power_delay_profile(estimation::impulse_response(h_hat));
    json pdp_db = json::array();
    const double peak = *std::max_element(pdp.power.begin(), pdp.power.end());
    for (double p : pdp.power) {
        pdp_db.push_back(p > 0.0 && peak > 0.0 ? std::max(-120.0, 10.0 * std::log10(p / peak)) : -120.0);
    }
    return {
        {"format_version", kApiFormatVersion},
        {"ue", index},
        {"id", ue.id},
        {"dims", {ue.iq.subcarriers(), ue.iq.symbols(), ue.iq.snapshots()}},
        {"magnitude_variance", validation::magnitude_variance(normalized)},
        {"max_lag", max_lag},
        {"autocorr", validation::temporal_autocorrelation(normalized, max_lag)},
        {"bin_duration_s", pdp.bin_duration_s},
        {"pdp_db", pdp_db},
        {"rms_delay_spread_s", peak > 0.0 ? estimation::rms_delay_spread(pdp) : 0.0},
    };
}

} // namespace

std::string_view to_string(RunState s)
{
    switch (s) {
    case RunState::queued:
        return "queued";
    case RunState::running:
        return "running";
    case RunState::completed:
        return "completed";
    case RunState::failed:
        return "failed";
    }
    return "failed";
}

ApiError::ApiError(int status, const std::string& message, json details)
    : std::runtime_error(message), status_(status), details_(std::move(details))
{
}

ServiceConfig ServiceConfig::from_env()
{
    ServiceConfig c;
    if (const char* dir = std::getenv("NEXTSENSE_DATA_DIR"); dir != nullptr && *dir != '\0') {
        c.data_dir = dir;
    }
    if (const char* port = std::getenv("NEXTSENSE_PORT"); port != nullptr && *port != '\0') {
        c.port = std::stoi(port);
    }
    c.workers = std::max(1U, std::thread::hardware_concurrency());
    if (const char* w = std::getenv("NEXTSENSE_WORKERS"); w != nullptr && *w != '\0') {
        c.workers = std::max<std::size_t>(1, std::stoul(w));
    }
    if (const char* token = std::getenv("NEXTSENSE_TOKEN"); token != nullptr && *token != '\0') {
        c.token = token;
    }
    return c;
}

std::optional<std::string> HttpRequest::query_value(const std::string& key) const
{
    auto it = query.find(key);
    if (it == query.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::string> HttpRequest::header(const std::string& lowercase_key) const
{
    auto it = headers.find(lowercase_key);
    if (it == headers.end()) {
        return std::nullopt;
    }
    return it->second;
}

// ---------------------------------------------------------------------------
// Registry and workers

struct Service::Impl {
    ServiceConfig cfg;
    mutable std::mutex mu;
    mutable std::condition_variable done_cv;
    std::condition_variable work_cv;
    std::map<std::string, RunRecord> runs; // ids sort in creation order
    std::map<std::string, std::string> by_key;
    std::deque<std::string> queue;
    std::vector<std::thread> workers;
    std::ofstream journal;
    std::size_t next_seq = 1;
    bool stopping = false;

    fs::path journal_path() const { return cfg.data_dir / "registry.jsonl"; }
    fs::path run_dir(const std::string& id) const { return cfg.data_dir / "runs" / id; }

    // Caller holds mu. The journal is the single writer of registry state.
    void append(const json& event)
    {
        journal << event.dump() << '\n';
        journal.flush();
        if (!journal) {
            throw IoError(journal_path().string() + ": journal append failed");
        }
    }

    void replay();
    void worker_loop();
    void execute(const std::string& id);
    void finish(const std::string& id, RunState state, const std::optional<std::string>& error);
};

void Service::Impl::replay()
{
    std::ifstream in(journal_path());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json ev;
        try {
            ev = json::parse(line);
        } catch (const json::parse_error&) {
            // a torn final line from a crash mid-append; anything else is corruption
            if (in.peek() == std::char_traits<char>::eof()) {
                break;
            }
            throw IntegrityError(journal_path().string() + ":" + std::to_string(line_no) + ": malformed entry");
        }
        const std::string op = ev.value("op", "");
        const std::string id = ev.value("id", "");
        if (op == "create") {
            RunRecord r;
            r.run_id = id;
            r.spec = scenario::spec_from_json(ev.at("spec"));
            r.idempotency_key = ev.value("idempotency_key", "");
            r.body_digest = ev.value("body_sha256", "");
            r.created_at = ev.value("at", "");
            if (!r.idempotency_key.empty()) {
                by_key[r.idempotency_key] = id;
            }
            runs[id] = std::move(r);
            if (id.size() > 4) {
                next_seq = std::max<std::size_t>(next_seq, std::stoul(id.substr(4)) + 1);
            }
            continue;
        }
        auto it = runs.find(id);
        if (it == runs.end()) {
            throw IntegrityError(journal_path().string() + ":" + std::to_string(line_no) + ": unknown run " + id);
        }
        RunRecord& r = it->second;
        if (op == "submit") {
            r.submitted = true;
        } else if (op == "start") {
            r.state = RunState::running;
            r.started_at = ev.value("at", "");
        } else if (op == "finish") {
            r.state = parse_state(ev.value("state", "failed")).value_or(RunState::failed);
            r.finished_at = ev.value("at", "");
            r.dataset_path = ev.value("dataset_path", "");
            if (ev.contains("error") && ev["error"].is_string()) {
                r.error = ev["error"].get<std::string>();
            }
            r.progress = r.state == RunState::completed ? 1.0 : r.progress;
        }
    }

    journal.open(journal_path(), std::ios::app);
    if (!journal) {
        throw IoError(journal_path().string() + ": cannot open journal for appending");
    }
    for (auto& [id, r] : runs) {
        if (r.state == RunState::running) {
            r.state = RunState::failed;
            r.error = "interrupted";
            r.finished_at = runner::utc_timestamp();
            append({{"op", "finish"}, {"id", id}, {"state", "failed"}, {"error", "interrupted"}, {"at", r.finished_at}});
        } else if (r.state == RunState::completed) {
            try {
                runner::verify_dataset(r.dataset_path);
            } catch (const std::exception& e) {
                // completed runs must stay verifiable; report the damage
                r.state = RunState::failed;
                r.error = std::string("integrity check failed: ") + e.what();
                r.finished_at = runner::utc_timestamp();
                append({{"op", "finish"}, {"id", id}, {"state", "failed"}, {"error", *r.error}, {"at", r.finished_at}});
            }
        } else if (r.state == RunState::queued && r.submitted) {
            queue.push_back(id);
        }
    }
}

void Service::Impl::finish(const std::string& id, RunState state, const std::optional<std::string>& error)
{
    std::lock_guard lock(mu);
    RunRecord& r = runs.at(id);
    r.state = state;
    r.error = error;
    r.finished_at = runner::utc_timestamp();
    if (state == RunState::completed) {
        r.progress = 1.0;
    }
    json ev = {{"op", "finish"}, {"id", id}, {"state", std::string(to_string(state))}, {"at", r.finished_at}};
    if (state == RunState::completed) {
        ev["dataset_path"] = r.dataset_path;
    }
    if (error) {
        ev["error"] = *error;
    }
    append(ev);
    done_cv.notify_all();
}

void Service::Impl::execute(const std::string& id)
{
    scenario::ExperimentSpec spec;
    {
        std::lock_guard lock(mu);
        RunRecord& r = runs.at(id);
        r.state = RunState::running;
        r.started_at = runner::utc_timestamp();
        append({{"op", "start"}, {"id", id}, {"at", r.started_at}});
        spec = r.spec;
    }
    auto report = [&](double fraction) {
        std::lock_guard lock(mu);
        if (stopping) {
            throw Interrupted{};
        }
        RunRecord& r = runs.at(id);
        r.progress = std::max(r.progress, fraction);
    };
    try {
        const runner::RunDataset ds = runner::run_experiment(spec, [&](double f) { report(f * kExecutionShare); });
        const fs::path dir = run_dir(id);
        const fs::path staging = dir / "dataset.partial";
        const fs::path final_dir = dir / "dataset";
        fs::remove_all(staging);
        fs::remove_all(final_dir);
        runner::write_dataset(ds, staging);
        fs::rename(staging, final_dir);
        report(0.97);
        const waveform::ReferenceSignal x = runner::reference_for(spec);
        for (std::size_t u = 0; u < ds.ues.size(); ++u) {
            const fs::path derived = dir / "derived" / runner::ue_dir_name(u);
            fs::create_directories(derived);
            std::ofstream(derived / "stats.json") << ue_stats(ds.ues[u], x, u).dump(2) << '\n';
            std::ofstream(derived / "waterfall.csv")
                << validation::waterfall_csv(validation::waterfall(validation::power_normalize(ds.ues[u].iq)));
        }
        {
            std::lock_guard lock(mu);
            runs.at(id).dataset_path = final_dir.string();
        }
        finish(id, RunState::completed, std::nullopt);
    } catch (const Interrupted&) {
        // left as running in the journal; the next start reports it
    } catch (const std::exception& e) {
        finish(id, RunState::failed, std::string(e.what()));
    }
}

void Service::Impl::worker_loop()
{
    while (true) {
        std::string id;
        {
            std::unique_lock lock(mu);
            work_cv.wait(lock, [&] { return stopping || !queue.empty(); });
            if (stopping) {
                return;
            }
            id = queue.front();
            queue.pop_front();
        }
        execute(id);
    }
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>()), config_(std::move(config))
{
    impl_->cfg = config_;
    std::error_code ec;
    fs::create_directories(config_.data_dir / "runs", ec);
    if (ec) {
        throw IoError(config_.data_dir.string() + ": cannot create data directory: " + ec.message());
    }
    impl_->replay();
    const std::size_t n = std::max<std::size_t>(1, config_.workers);
    for (std::size_t i = 0; i < n; ++i) {
        impl_->workers.emplace_back([this] { impl_->worker_loop(); });
    }
}

Service::~Service()
{
    shutdown();
}

void Service::shutdown()
{
    {
        std::lock_guard lock(impl_->mu);
        if (impl_->stopping && impl_->workers.empty()) {
            return;
        }
        impl_->stopping = true;
    }
    impl_->work_cv.notify_all();
    for (auto& t : impl_->workers) {
        if (t.joinable()) {
            t.join();
        }
    }
    impl_->workers.clear();
    impl_->done_cv.notify_all();
}

fs::path Service::run_dir(const std::string& run_id) const
{
    return impl_->run_dir(run_id);
}

fs::path Service::dataset_dir(const std::string& run_id) const
{
    return impl_->run_dir(run_id) / "dataset";
}

std::pair<std::string, bool> Service::create_experiment(const scenario::ExperimentSpec& spec,
                                                        const std::string& idempotency_key)
{
    const auto violations = scenario::validate_spec(spec);
    if (!violations.empty()) {
        throw ApiError(400, "invalid experiment spec", {{"violations", scenario::to_json(violations)}});
    }
    const json doc = scenario::to_json(spec);
    const std::string body_digest = digest::sha256_hex(doc.dump());
    std::lock_guard lock(impl_->mu);
    if (!idempotency_key.empty()) {
        if (auto it = impl_->by_key.find(idempotency_key); it != impl_->by_key.end()) {
            if (impl_->runs.at(it->second).body_digest != body_digest) {
                throw ApiError(409, "idempotency key reused with a different body", {{"run_id", it->second}});
            }
            return {it->second, false};
        }
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "run-%06zu", impl_->next_seq++);
    RunRecord r;
    r.run_id = buf;
    r.spec = spec;
    r.idempotency_key = idempotency_key;
    r.body_digest = body_digest;
    r.created_at = runner::utc_timestamp();
    impl_->append({{"op", "create"},
                   {"id", r.run_id},
                   {"at", r.created_at},
                   {"idempotency_key", idempotency_key},
                   {"body_sha256", body_digest},
                   {"spec", doc}});
    if (!idempotency_key.empty()) {
        impl_->by_key[idempotency_key] = r.run_id;
    }
    const std::string id = r.run_id;
    impl_->runs[id] = std::move(r);
    return {id, true};
}

RunRecord Service::submit(const std::string& run_id)
{
    std::lock_guard lock(impl_->mu);
    auto it = impl_->runs.find(run_id);
    if (it == impl_->runs.end()) {
        throw ApiError(404, "unknown experiment " + run_id);
    }
    RunRecord& r = it->second;
    if (r.state == RunState::queued && !r.submitted) {
        if (impl_->stopping) {
            throw ApiError(503, "service is shutting down");
        }
        r.submitted = true;
        impl_->append({{"op", "submit"}, {"id", run_id}, {"at", runner::utc_timestamp()}});
        impl_->queue.push_back(run_id);
        impl_->work_cv.notify_one();
    }
    return r;
}

RunRecord Service::status(const std::string& run_id) const
{
    std::lock_guard lock(impl_->mu);
    auto it = impl_->runs.find(run_id);
    if (it == impl_->runs.end()) {
        throw ApiError(404, "unknown run " + run_id);
    }
    return it->second;
}

std::optional<std::size_t> Service::queue_position(const std::string& run_id) const
{
    std::lock_guard lock(impl_->mu);
    const auto& q = impl_->queue;
    auto it = std::find(q.begin(), q.end(), run_id);
    if (it == q.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - q.begin());
}

std::vector<RunRecord> Service::list() const
{
    std::lock_guard lock(impl_->mu);
    std::vector<RunRecord> out;
    for (const auto& [id, r] : impl_->runs) {
        out.push_back(r);
    }
    return out;
}

bool Service::wait(const std::string& run_id, std::chrono::milliseconds timeout) const
{
    std::unique_lock lock(impl_->mu);
    return impl_->done_cv.wait_for(lock, timeout, [&] {
        auto it = impl_->runs.find(run_id);
        return it == impl_->runs.end() || it->second.state == RunState::completed ||
               it->second.state == RunState::failed;
    });
}

json Service::status_json(const RunRecord& r) const
{
    json body = {
        {"format_version", kApiFormatVersion},
        {"run_id", r.run_id},
        {"experiment_id", r.run_id},
        {"name", r.spec.name},
        {"state", std::string(to_string(r.state))},
        {"progress", r.progress},
        {"submitted", r.submitted},
        {"created_at", r.created_at},
        {"started_at", r.started_at.empty() ? json(nullptr) : json(r.started_at)},
        {"finished_at", r.finished_at.empty() ? json(nullptr) : json(r.finished_at)},
        {"error", r.error ? json(*r.error) : json(nullptr)},
        {"dataset_path", r.dataset_path.empty() ? json(nullptr) : json(r.dataset_path)},
    };
    const auto pos = queue_position(r.run_id);
    body["queue_position"] = pos ? json(*pos) : json(nullptr);
    if (r.state == RunState::completed) {
        body["artifacts"] = {"manifest", "iq", "kpis", "mobility", "events", "stats", "waterfall",
                             "preview_trajectory"};
        body["num_ues"] = r.spec.ues.size();
    }
    return body;
}

json Service::compare(const std::string& a, const std::string& b, std::size_t ue) const
{
    const RunRecord ra = status(a);
    const RunRecord rb = status(b);
    for (const RunRecord* r : {&ra, &rb}) {
        if (r->state != RunState::completed) {
            throw ApiError(409, "run " + r->run_id + " is " + std::string(to_string(r->state)) + ", not completed");
        }
        if (ue >= r->spec.ues.size()) {
            throw ApiError(404, "run " + r->run_id + " has no UE " + std::to_string(ue));
        }
    }
    const IQTensor ta = runner::read_ue_iq(ra.dataset_path, ue);
    const IQTensor tb = runner::read_ue_iq(rb.dataset_path, ue);
    if (!ta.same_shape(tb)) {
        throw ApiError(409, "tensor dimensions differ",
                       {{"dims_a", {ta.subcarriers(), ta.symbols(), ta.snapshots()}},
                        {"dims_b", {tb.subcarriers(), tb.symbols(), tb.snapshots()}}});
    }
    json body = validation::to_json(validation::ensemble_report(ta, tb));
    body["a"] = a;
    body["b"] = b;
    body["ue"] = ue;
    return body;
}

// ---------------------------------------------------------------------------
// Routing

HttpResponse Service::handle(const HttpRequest& req)
{
    try {
        if (config_.token) {
            const auto auth = req.header("authorization");
            if (!auth || *auth != "Bearer " + *config_.token) {
                return json_response(401, error_body("missing or invalid bearer token"));
            }
        }
        const auto seg = path_segments(req.path);
        if (seg.empty() || seg[0] != "v1") {
            return json_response(404, error_body("no such endpoint: " + req.path));
        }
        const bool get = req.method == "GET";
        const bool post = req.method == "POST";
        auto method_not_allowed = [&] { return json_response(405, error_body("method not allowed")); };

        if (seg.size() == 2 && seg[1] == "health") {
            return json_response(200, {{"format_version", kApiFormatVersion}, {"status", "ok"}});
        }
        if (seg.size() == 2 && seg[1] == "experiments") {
            if (!post) {
                return method_not_allowed();
            }
            scenario::ExperimentSpec spec;
            try {
                spec = scenario::parse_spec(req.body);
            } catch (const scenario::SpecParseError& e) {
                return json_response(
                    400, error_body("invalid experiment spec", {{"violations", violations_from_parse_error(e.what())}}));
            }
            const auto [id, created] = create_experiment(spec, req.header("idempotency-key").value_or(""));
            json body = status_json(status(id));
            return json_response(created ? 201 : 200, body);
        }
        if (seg.size() >= 3 && seg[1] == "experiments") {
            const std::string& id = seg[2];
            if (seg.size() == 3) {
                if (!get) {
                    return method_not_allowed();
                }
                const RunRecord r = status(id);
                json body = status_json(r);
                body["spec"] = scenario::to_json(r.spec);
                body["idempotency_key"] = r.idempotency_key;
                return json_response(200, body);
            }
            if (seg.size() == 4 && seg[3] == "run") {
                if (!post) {
                    return method_not_allowed();
                }
                const bool was_new = !status(id).submitted;
                const RunRecord r = submit(id);
                return json_response(was_new ? 202 : 200, status_json(r));
            }
        }
        if (seg.size() == 2 && seg[1] == "runs") {
            if (!get) {
                return method_not_allowed();
            }
            json items = json::array();
            for (const auto& r : list()) {
                items.push_back(status_json(r));
            }
            return json_response(200, {{"format_version", kApiFormatVersion}, {"runs", items}});
        }
        if (seg.size() >= 3 && seg[1] == "runs") {
            if (!get) {
                return method_not_allowed();
            }
            const RunRecord r = status(seg[2]);
            if (seg.size() == 3) {
                return json_response(200, status_json(r));
            }
            if (seg.size() == 4 && seg[3] == "preview") {
                return json_response(200, scenario::preview_json(r.spec));
            }
            if (seg.size() == 5 && seg[3] == "artifacts") {
                const std::string& name = seg[4];
                if (name == "preview_trajectory") {
                    return json_response(200, scenario::preview_json(r.spec));
                }
                static const std::map<std::string, std::pair<std::string, std::string>> files = {
                    {"iq", {"iq.bin", "application/octet-stream"}},
                    {"kpis", {"kpis.csv", "text/csv"}},
                    {"mobility", {"mobility.csv", "text/csv"}},
                    {"events", {"events.log", "text/plain"}},
                    {"stats", {"stats.json", "application/json"}},
                    {"waterfall", {"waterfall.csv", "text/csv"}},
                };
                if (name != "manifest" && !files.count(name)) {
                    return json_response(404, error_body("unknown artifact " + name));
                }
                if (r.state != RunState::completed) {
                    return json_response(409, error_body("run " + r.run_id + " is " +
                                                         std::string(to_string(r.state)) + ", not completed"));
                }
                const fs::path dataset = r.dataset_path;
                if (name == "manifest") {
                    return {200, "application/json", read_file(dataset / "manifest.json")};
                }
                const std::size_t ue = parse_ue_index(req);
                if (ue >= r.spec.ues.size()) {
                    return json_response(404, error_body("run has no UE " + std::to_string(ue)));
                }
                const auto& [file, type] = files.at(name);
                const bool derived = name == "stats" || name == "waterfall";
                const fs::path base = derived ? run_dir(r.run_id) / "derived" : dataset;
                return {200, type, read_file(base / runner::ue_dir_name(ue) / file)};
            }
        }
        if (seg.size() == 2 && seg[1] == "preview") {
            if (!post) {
                return method_not_allowed();
            }
            scenario::ExperimentSpec spec;
            try {
                spec = scenario::parse_spec(req.body);
            } catch (const scenario::SpecParseError& e) {
                return json_response(
                    400, error_body("invalid experiment spec", {{"violations", violations_from_parse_error(e.what())}}));
            }
            const auto violations = scenario::validate_spec(spec);
            if (!violations.empty()) {
                return json_response(
                    400, error_body("invalid experiment spec", {{"violations", scenario::to_json(violations)}}));
            }
            return json_response(200, scenario::preview_json(spec));
        }
        if (seg.size() == 2 && seg[1] == "compare") {
            if (!post) {
                return method_not_allowed();
            }
            const auto a = req.query_value("a");
            const auto b = req.query_value("b");
            if (!a || !b) {
                return json_response(400, error_body("query parameters 'a' and 'b' are required"));
            }
            return json_response(200, compare(*a, *b, parse_ue_index(req)));
        }
        return json_response(404, error_body("no such endpoint: " + req.path));
    } catch (const ApiError& e) {
        return json_response(e.status(), error_body(e.what(), e.details()));
    } catch (const IntegrityError& e) {
        return json_response(500, error_body(std::string("integrity error: ") + e.what()));
    } catch (const std::exception& e) {
        return json_response(500, error_body(e.what()));
    }
}

// ---------------------------------------------------------------------------
// HTTP server

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service))
{
    auto forward = [this](const httplib::Request& in, httplib::Response& out) {
        HttpRequest req;
        req.method = in.method;
        req.path = in.path;
        for (const auto& [k, v] : in.params) {
            req.query.emplace(k, v);
        }
        for (const auto& [k, v] : in.headers) {
            req.headers[lowercase(k)] = v;
        }
        req.body = in.body;
        const HttpResponse res = impl_->service.handle(req);
        out.status = res.status;
        out.set_content(res.body, res.content_type);
    };
    impl_->server.Get(".*", forward);
    impl_->server.Post(".*", forward);
    impl_->server.Put(".*", forward);
    impl_->server.Delete(".*", forward);
}

HttpServer::~HttpServer()
{
    stop();
}

int HttpServer::start(const std::string& host, int port)
{
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::stop()
{
    if (impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

} // namespace nextsense::api
