#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cexforge/session.hpp"

namespace cexforge {

struct ServiceOptions {
    // Root for "path" model references in POST /v1/sessions; empty disables them.
    std::filesystem::path model_dir;
    std::chrono::seconds session_ttl{1800};
    bool allow_localhost_cors = true;
};

struct Request {
    std::string method;
    std::string path;
    std::string body;
    std::map<std::string, std::string> query;
    std::string origin;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
    std::map<std::string, std::string> headers;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

// Session JSON projection consumed by the UI.
nlohmann::ordered_json view_dto(const RefinementSession& session);

// JSON schema of the request and response bodies.
nlohmann::ordered_json service_schema();

// In-memory session API. dispatch() is safe to call concurrently; requests
// on one session are serialized, distinct sessions proceed in parallel.
class Service {
public:
    using Clock = std::chrono::steady_clock;

    explicit Service(ServiceOptions options = {});

    Response dispatch(const Request& request);

    // Drops sessions idle for longer than `ttl`. Sessions busy with a request
    // are skipped.
    std::vector<std::string> session_gc(Clock::duration ttl);
    std::vector<std::string> session_gc() { return session_gc(options_.session_ttl); }

    std::size_t session_count() const;
    const ServiceOptions& options() const noexcept { return options_; }

private:
    struct Entry {
        std::mutex mutex;
        std::unique_ptr<RefinementSession> session;
        Clock::time_point last_used;
    };

    Response create_session(const Request& request);
    Response import_session(const Request& request);
    Response session_action(const Request& request, const std::string& id, const std::string& action);
    std::string register_session(RefinementSession session);
    std::shared_ptr<Entry> find(const std::string& id) const;
    Dtmc load_request_model(const nlohmann::json& body) const;

    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

// Binds and serves until stop_service() is called or the process exits.
// Runs session_gc every `gc_interval`.
void serve(Service& service, const std::string& host, int port,
           std::chrono::seconds gc_interval = std::chrono::seconds(60));
void stop_service();

} // namespace cexforge
