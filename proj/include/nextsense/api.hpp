// SPDX-License-Identifier: Apache-2.0
//
// Experiment service: a persistent run registry, a FIFO worker pool and the
// versioned HTTP interface in front of them.
//
// An experiment and its run share one identifier. POST /v1/experiments
// records the run in the queued state; POST /v1/experiments/{id}/run hands it
// to the worker pool. The registry is an append-only JSON-lines journal in
// the data directory; each run owns runs/<id>/ with the dataset and derived
// artifacts (per-UE stats.json and waterfall.csv).

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nextsense/scenario.hpp"

namespace nextsense::api {

inline constexpr int kApiFormatVersion = 1;

enum class RunState { queued, running, completed, failed };

std::string_view to_string(RunState s);

struct RunRecord {
    std::string run_id;
    scenario::ExperimentSpec spec;
    std::string idempotency_key;
    std::string body_digest; // SHA-256 of the canonical spec document
    RunState state = RunState::queued;
    bool submitted = false; // handed to the worker pool
    double progress = 0.0;
    std::string created_at;
    std::string started_at;
    std::string finished_at;
    std::string dataset_path;
    std::optional<std::string> error;
};

struct ServiceConfig {
    std::filesystem::path data_dir = "nextsense-data";
    std::size_t workers = 1;
    std::optional<std::string> token; // bearer token required when set
    int port = 8080;

    /// NEXTSENSE_DATA_DIR, NEXTSENSE_PORT, NEXTSENSE_WORKERS (default: logical
    /// CPU count) and NEXTSENSE_TOKEN.
    static ServiceConfig from_env();
};

struct HttpRequest {
    std::string method;
    std::string path;
    std::multimap<std::string, std::string> query;
    std::map<std::string, std::string> headers; // keys lowercase
    std::string body;

    std::optional<std::string> query_value(const std::string& key) const;
    std::optional<std::string> header(const std::string& lowercase_key) const;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Thrown by Service calls with the HTTP status that describes the failure.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, const std::string& message, nlohmann::json details = nlohmann::json::object());
    int status() const { return status_; }
    const nlohmann::json& details() const { return details_; }

private:
    int status_;
    nlohmann::json details_;
};

class Service {
public:
    /// Opens (or creates) the data directory and replays the journal: runs
    /// left running become failed("interrupted"), submitted runs are queued
    /// again and completed runs are integrity-checked.
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    const ServiceConfig& config() const { return config_; }

    /// Routes one request. Never throws.
    HttpResponse handle(const HttpRequest& request);

    // Programmatic surface used by the HTTP handler and by tests.

    /// Returns the run id and whether a new record was created.
    std::pair<std::string, bool> create_experiment(const scenario::ExperimentSpec& spec,
                                                   const std::string& idempotency_key = {});
    RunRecord submit(const std::string& run_id);
    RunRecord status(const std::string& run_id) const;
    std::optional<std::size_t> queue_position(const std::string& run_id) const;
    std::vector<RunRecord> list() const;

    /// Blocks until the run is completed or failed, or the timeout expires.
    bool wait(const std::string& run_id, std::chrono::milliseconds timeout) const;

    std::filesystem::path run_dir(const std::string& run_id) const;
    std::filesystem::path dataset_dir(const std::string& run_id) const;

    nlohmann::json status_json(const RunRecord& r) const;
    nlohmann::json compare(const std::string& a, const std::string& b, std::size_t ue) const;

    /// Stops the workers. A run in progress is abandoned and will be reported
    /// as interrupted on the next start.
    void shutdown();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ServiceConfig config_;
};

/// HTTP front end (cpp-httplib) forwarding every request to Service::handle.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    /// Binds (port 0 picks a free port), starts serving on a background
    /// thread and returns the bound port.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace nextsense::api
