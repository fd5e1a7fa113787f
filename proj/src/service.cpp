#include "cexforge/service.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace cexforge {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Response json_response(int status, const ordered_json& body) { return {status, body.dump(), "application/json", {}}; }

Response error_response(int status, const std::string& message) {
    return json_response(status, {{"error", message}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream in(path);
    for (std::string part; std::getline(in, part, '/');)
        if (!part.empty()) parts.push_back(part);
    return parts;
}

std::string random_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}() ^
                                            (std::uint64_t(std::random_device{}()) << 32)};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

bool localhost_origin(const std::string& origin) {
    static const std::regex pattern(R"(^https?://(localhost|127\.0\.0\.1|\[::1\])(:\d+)?$)");
    return std::regex_match(origin, pattern);
}

ReachabilityProperty parse_property(const json& p) {
    ReachabilityProperty prop;
    const auto cmp = p.at("comparison").get<std::string>();
    if (cmp == "le")
        prop.comparison = Comparison::less_eq;
    else if (cmp == "lt")
        prop.comparison = Comparison::less;
    else
        throw UsageError("comparison must be \"le\" or \"lt\"");
    prop.threshold = p.at("threshold").get<double>();
    if (!(prop.threshold >= 0.0 && prop.threshold <= 1.0)) throw UsageError("threshold must lie in [0, 1]");
    prop.target_label = p.at("target").get<std::string>();
    return prop;
}

SessionOptions parse_options(const json& body) {
    SessionOptions options;
    const auto method = body.value("method", std::string("global"));
    if (method == "global")
        options.method = SearchMethod::global;
    else if (method == "local")
        options.method = SearchMethod::local;
    else
        throw UsageError("method must be \"global\" or \"local\"");
    options.search.state_closure = body.value("state_closure", false);
    if (body.contains("max_steps")) options.search.budget.max_steps = body.at("max_steps").get<std::size_t>();
    if (body.contains("max_time_ms"))
        options.search.budget.max_time = std::chrono::milliseconds(body.at("max_time_ms").get<std::int64_t>());
    return options;
}

ordered_json gauge(const RefinementSession& s) {
    return {{"prob", s.subsystem_probability()},
            {"threshold", s.property().threshold},
            {"comparison", s.property().comparison == Comparison::less_eq ? "le" : "lt"},
            {"model_prob", s.model_probability()},
            {"status", to_string(s.status())}};
}

ordered_json summary(const std::string& id, const RefinementSession& s) {
    return {{"id", id},
            {"status", to_string(s.status())},
            {"gauge", gauge(s)},
            {"history", s.history().size()}};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

} // namespace

ordered_json view_dto(const RefinementSession& s) {
    const View& view = s.view();
    const Dtmc& graph = view.graph();
    const Subsystem& sub = s.subsystem();

    std::vector<std::vector<std::string>> labels(view.num_vertices());
    for (const auto& [name, vertices] : graph.labels())
        for (VertexId v : vertices) labels[v].push_back(name);

    ordered_json vertices = ordered_json::array();
    for (VertexId v = 0; v < view.num_vertices(); ++v) {
        const ViewVertex& vertex = view.vertex(v);
        const auto covered = view.covered_states(v);
        ordered_json item = {{"id", v},
                             {"kind", vertex.kind == VertexKind::concrete ? "concrete" : "abstract"},
                             {"state", vertex.state}};
        if (vertex.kind == VertexKind::abstract) item["node"] = vertex.node;
        item["covered"] = std::vector<StateId>(covered.begin(), covered.end());
        item["labels"] = labels[v];
        item["in_subsystem"] = sub.contains(v);
        item["initial"] = v == view.initial();
        vertices.push_back(std::move(item));
    }
    ordered_json edges = ordered_json::array();
    for (VertexId v = 0; v < view.num_vertices(); ++v)
        for (const auto& t : graph.row(v))
            edges.push_back({{"src", v}, {"dst", t.target}, {"prob", t.prob},
                             {"in_subsystem", sub.contains(Edge{v, t.target})}});

    ordered_json nodes = ordered_json::array();
    for (const auto& node : s.hierarchy()->nodes()) {
        ordered_json item = {{"id", node.id}};
        item["parent"] = node.parent ? ordered_json(*node.parent) : ordered_json(nullptr);
        item["members"] = node.members;
        item["expanded"] = s.expanded().contains(node.id);
        nodes.push_back(std::move(item));
    }

    ordered_json dto;
    dto["vertices"] = std::move(vertices);
    dto["edges"] = std::move(edges);
    dto["gauge"] = gauge(s);
    dto["nodes"] = std::move(nodes);
    dto["expandable"] = expandable_nodes(*s.hierarchy(), s.expanded());
    dto["history"] = s.history().size();
    return dto;
}

ordered_json service_schema() {
    const ordered_json property = {
        {"type", "object"},
        {"required", {"comparison", "threshold", "target"}},
        {"properties",
         {{"comparison", {{"enum", {"le", "lt"}}}},
          {"threshold", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
          {"target", {{"type", "string"}}}}}};
    const ordered_json gauge_schema = {
        {"type", "object"},
        {"required", {"prob", "threshold", "comparison", "status"}},
        {"properties",
         {{"prob", {{"type", "number"}}},
          {"threshold", {{"type", "number"}}},
          {"comparison", {{"enum", {"le", "lt"}}}},
          {"model_prob", {{"type", "number"}}},
          {"status", {{"enum", {"searching", "critical", "budget_exhausted"}}}}}}};

    ordered_json doc;
    doc["$schema"] = "https://json-schema.org/draft/2020-12/schema";
    doc["$id"] = "cexforge-api/1";
    doc["$defs"]["property"] = property;
    doc["$defs"]["gauge"] = gauge_schema;
    doc["$defs"]["create_request"] = {
        {"type", "object"},
        {"required", {"property"}},
        {"properties",
         {{"model",
           {{"type", "object"},
            {"properties",
             {{"tra", {{"type", "string"}}},
              {"lab", {{"type", "string"}}},
              {"path", {{"type", "string"}}},
              {"initial", {{"type", "integer"}, {"minimum", 0}}},
              {"one_based", {{"type", "boolean"}}}}}}},
          {"property", {{"$ref", "#/$defs/property"}}},
          {"method", {{"enum", {"global", "local"}}}},
          {"state_closure", {{"type", "boolean"}}},
          {"max_steps", {{"type", "integer"}, {"minimum", 0}}},
          {"max_time_ms", {{"type", "integer"}, {"minimum", 0}}}}}};
    doc["$defs"]["session"] = {
        {"type", "object"},
        {"required", {"id", "status", "gauge"}},
        {"properties",
         {{"id", {{"type", "string"}, {"pattern", "^[0-9a-f]{32}$"}}},
          {"status", {{"type", "string"}}},
          {"gauge", {{"$ref", "#/$defs/gauge"}}},
          {"history", {{"type", "integer"}}}}}};
    doc["$defs"]["holds"] = {{"type", "object"},
                             {"required", {"verdict", "prob"}},
                             {"properties", {{"verdict", {{"const", "holds"}}}, {"prob", {{"type", "number"}}}}}};
    doc["$defs"]["concretize_request"] = {
        {"type", "object"},
        {"required", {"nodes"}},
        {"properties", {{"nodes", {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 0}}}}}}}};
    doc["$defs"]["view"] = {
        {"type", "object"},
        {"required", {"vertices", "edges", "gauge"}},
        {"properties",
         {{"vertices",
           {{"type", "array"},
            {"items",
             {{"type", "object"},
              {"required", {"id", "kind", "state", "covered", "labels", "in_subsystem"}},
              {"properties",
               {{"id", {{"type", "integer"}}},
                {"kind", {{"enum", {"concrete", "abstract"}}}},
                {"state", {{"type", "integer"}}},
                {"node", {{"type", "integer"}}},
                {"covered", {{"type", "array"}, {"items", {{"type", "integer"}}}}},
                {"labels", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                {"in_subsystem", {{"type", "boolean"}}},
                {"initial", {{"type", "boolean"}}}}}}}}},
          {"edges",
           {{"type", "array"},
            {"items",
             {{"type", "object"},
              {"required", {"src", "dst", "prob", "in_subsystem"}},
              {"properties",
               {{"src", {{"type", "integer"}}},
                {"dst", {{"type", "integer"}}},
                {"prob", {{"type", "number"}}},
                {"in_subsystem", {{"type", "boolean"}}}}}}}}},
          {"gauge", {{"$ref", "#/$defs/gauge"}}},
          {"expandable", {{"type", "array"}, {"items", {{"type", "integer"}}}}}}}};
    doc["$defs"]["error"] = {{"type", "object"},
                             {"required", {"error"}},
                             {"properties", {{"error", {{"type", "string"}}}}}};
    doc["endpoints"] = {
        {"POST /v1/sessions", {{"request", "create_request"}, {"201", "session"}, {"422", "holds"}}},
        {"POST /v1/sessions/import", {{"request", "cexforge-session/1"}, {"201", "session"}}},
        {"GET /v1/sessions/{id}/view", {{"200", "view"}}},
        {"POST /v1/sessions/{id}/search", {{"200", "session"}, {"409", "error"}}},
        {"POST /v1/sessions/{id}/concretize", {{"request", "concretize_request"}, {"200", "session"}, {"409", "error"}}},
        {"POST /v1/sessions/{id}/refine", {{"200", "session"}, {"409", "error"}}},
        {"POST /v1/sessions/{id}/undo", {{"200", "session"}, {"409", "error"}}},
        {"GET /v1/sessions/{id}/report", {{"200", "cexforge-report/1"}}},
        {"GET /v1/sessions/{id}/export", {{"200", "cexforge-session/1"}}},
        {"DELETE /v1/sessions/{id}", {{"204", nullptr}}},
    };
    return doc;
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

std::size_t Service::session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::string Service::register_session(RefinementSession session) {
    auto entry = std::make_shared<Entry>();
    entry->session = std::make_unique<RefinementSession>(std::move(session));
    entry->last_used = Clock::now();
    std::lock_guard lock(mutex_);
    std::string id;
    do id = random_id();
    while (sessions_.contains(id));
    sessions_.emplace(id, std::move(entry));
    return id;
}

Dtmc Service::load_request_model(const json& body) const {
    const auto& m = body.at("model");
    FormatOptions format{m.value("one_based", false)};
    std::string tra, lab;
    if (m.contains("path")) {
        if (options_.model_dir.empty()) throw UsageError("model paths are disabled; send tra/lab text");
        const auto rel = std::filesystem::path(m.at("path").get<std::string>());
        if (rel.is_absolute() || rel.lexically_normal().string().starts_with(".."))
            throw UsageError("model path must stay inside the model directory");
        const auto base = options_.model_dir / rel;
        tra = read_file(base.string() + ".tra");
        lab = read_file(base.string() + ".lab");
    } else {
        tra = m.at("tra").get<std::string>();
        lab = m.value("lab", std::string());
    }
    Dtmc model = parse_tra(tra, format);
    if (!lab.empty()) model = parse_lab(lab, model, format);
    if (m.contains("initial")) {
        const auto initial = m.at("initial").get<StateId>();
        if (initial >= model.num_states()) throw UsageError("initial state out of range");
        model = model.with_initial(initial);
    }
    return model;
}

Response Service::create_session(const Request& request) {
    json body;
    try {
        body = json::parse(request.body);
    } catch (const json::parse_error&) {
        return error_response(400, "request body is not JSON");
    }
    try {
        auto model = std::make_shared<const Dtmc>(load_request_model(body));
        const auto prop = parse_property(body.at("property"));
        auto session = RefinementSession::create(std::move(model), prop, parse_options(body));
        if (session.status() == SessionStatus::satisfied)
            return json_response(422, {{"verdict", "holds"}, {"prob", session.model_probability()}});
        const std::string id = register_session(std::move(session));
        spdlog::info("session {} created", id);
        auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        return json_response(201, summary(id, *entry->session));
    } catch (const json::exception& e) {
        return error_response(400, std::string("invalid body: ") + e.what());
    } catch (const Error& e) {
        return error_response(400, e.what());
    }
}

Response Service::import_session(const Request& request) {
    try {
        auto session = RefinementSession::import_document(request.body);
        if (session.status() == SessionStatus::satisfied)
            return json_response(422, {{"verdict", "holds"}, {"prob", session.model_probability()}});
        const std::string id = register_session(std::move(session));
        spdlog::info("session {} imported", id);
        auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        return json_response(201, summary(id, *entry->session));
    } catch (const Error& e) {
        return error_response(400, e.what());
    }
}

Response Service::session_action(const Request& request, const std::string& id, const std::string& action) {
    auto entry = find(id);
    if (!entry) return error_response(404, "unknown session " + id);
    std::lock_guard lock(entry->mutex);
    struct Touch {
        Entry& e;
        ~Touch() { e.last_used = Clock::now(); }
    } touch{*entry};
    RefinementSession& s = *entry->session;
    const std::string& m = request.method;

    try {
        if (m == "GET" && action == "view") return json_response(200, view_dto(s));
        if (m == "GET" && action == "report") {
            if (request.query.contains("format") && request.query.at("format") == "text")
                return {200, write_report(s.report()), "text/plain", {}};
            return json_response(200, report_to_json(s.report()));
        }
        if (m == "GET" && action == "export") return json_response(200, s.export_json());
        if (m != "POST") return error_response(405, "method not allowed");

        json body = json::object();
        if (!request.body.empty()) {
            try {
                body = json::parse(request.body);
            } catch (const json::parse_error&) {
                return error_response(400, "request body is not JSON");
            }
        }
        if (action == "search") {
            s.run_search();
        } else if (action == "concretize") {
            std::vector<NodeId> nodes;
            try {
                nodes = body.at("nodes").get<std::vector<NodeId>>();
            } catch (const json::exception&) {
                return error_response(400, "body must be {\"nodes\": [node ids]}");
            }
            s.concretize(nodes);
        } else if (action == "undo") {
            s.undo();
        } else if (action == "reset") {
            s.reset();
        } else if (action == "refine") {
            const auto policy = body.value("policy", std::string("mass_greedy"));
            if (policy == "mass_greedy")
                s.auto_refine(RefinePolicy::mass_greedy);
            else if (policy == "expand_all")
                s.auto_refine(RefinePolicy::expand_all);
            else
                return error_response(400, "policy must be \"mass_greedy\" or \"expand_all\"");
        } else {
            return error_response(404, "unknown action " + action);
        }
        return json_response(200, summary(id, s));
    } catch (const UsageError& e) {
        return error_response(409, e.what());
    } catch (const Error& e) {
        return error_response(500, e.what());
    }
}

Response Service::dispatch(const Request& request) {
    Response response = [&]() -> Response {
        const auto parts = split_path(request.path);
        if (request.method == "OPTIONS") return {204, "", "text/plain", {}};
        if (parts.empty() || parts[0] != "v1") return error_response(404, "not found");
        if (parts.size() == 2 && parts[1] == "schema" && request.method == "GET")
            return json_response(200, service_schema());
        if (parts.size() < 2 || parts[1] != "sessions") return error_response(404, "not found");
        if (parts.size() == 2) {
            if (request.method == "POST") return create_session(request);
            return error_response(405, "method not allowed");
        }
        if (parts.size() == 3 && parts[2] == "import" && request.method == "POST") return import_session(request);
        const std::string& id = parts[2];
        if (parts.size() == 3) {
            if (request.method != "DELETE") return error_response(405, "method not allowed");
            std::shared_ptr<Entry> entry;
            {
                std::lock_guard lock(mutex_);
                auto it = sessions_.find(id);
                if (it == sessions_.end()) return error_response(404, "unknown session " + id);
                entry = it->second;
                sessions_.erase(it);
            }
            std::lock_guard wait(entry->mutex); // let a running request finish
            spdlog::info("session {} deleted", id);
            return {204, "", "text/plain", {}};
        }
        if (parts.size() == 4) return session_action(request, id, parts[3]);
        return error_response(404, "not found");
    }();

    if (options_.allow_localhost_cors && localhost_origin(request.origin)) {
        response.headers["Access-Control-Allow-Origin"] = request.origin;
        response.headers["Vary"] = "Origin";
        if (request.method == "OPTIONS") {
            response.headers["Access-Control-Allow-Methods"] = "GET, POST, DELETE, OPTIONS";
            response.headers["Access-Control-Allow-Headers"] = "Content-Type";
        }
    }
    return response;
}

std::vector<std::string> Service::session_gc(Clock::duration ttl) {
    std::vector<std::string> evicted;
    const auto now = Clock::now();
    std::lock_guard lock(mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        std::unique_lock entry_lock(it->second->mutex, std::try_to_lock);
        if (entry_lock.owns_lock() && now - it->second->last_used > ttl) {
            spdlog::info("session {} evicted after idling past the TTL", it->first);
            evicted.push_back(it->first);
            entry_lock.unlock();
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
    return evicted;
}

namespace {
std::atomic<httplib::Server*> running_server{nullptr};
}

void stop_service() {
    if (auto* server = running_server.load()) server->stop();
}

void serve(Service& service, const std::string& host, int port, std::chrono::seconds gc_interval) {
    httplib::Server server;
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        Request request{req.method, req.path, req.body, {}, req.get_header_value("Origin")};
        for (const auto& [key, value] : req.params) request.query[key] = value;
        const Response response = service.dispatch(request);
        res.status = response.status;
        for (const auto& [key, value] : response.headers) res.set_header(key, value);
        if (!response.body.empty()) res.set_content(response.body, response.content_type);
        spdlog::debug("{} {} -> {}", req.method, req.path, response.status);
    };
    const std::string any = R"(/.*)";
    server.Get(any, handler);
    server.Post(any, handler);
    server.Delete(any, handler);
    server.Options(any, handler);

    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stopping = false;
    std::thread gc([&] {
        std::unique_lock lock(stop_mutex);
        while (!stop_cv.wait_for(lock, gc_interval, [&] { return stopping; })) service.session_gc();
    });

    running_server = &server;
    spdlog::info("listening on {}:{}", host, port);
    const bool ok = server.listen(host, port);
    running_server = nullptr;
    {
        std::lock_guard lock(stop_mutex);
        stopping = true;
    }
    stop_cv.notify_all();
    gc.join();
    if (!ok) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace cexforge
