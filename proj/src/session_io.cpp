#include "cexforge/session.hpp"

namespace cexforge {

namespace {

using nlohmann::ordered_json;

constexpr const char* session_schema = "cexforge-session/1";

std::string action_name(SessionAction::Kind k) {
    switch (k) {
    case SessionAction::Kind::search: return "search";
    case SessionAction::Kind::concretize: return "concretize";
    case SessionAction::Kind::reset: return "reset";
    }
    return "unknown";
}

SessionAction::Kind action_kind(const std::string& name) {
    if (name == "search") return SessionAction::Kind::search;
    if (name == "concretize") return SessionAction::Kind::concretize;
    if (name == "reset") return SessionAction::Kind::reset;
    throw ParseError(0, "unknown session action '" + name + "'");
}

ordered_json snapshot(const RefinementSession& s) {
    ordered_json out;
    out["status"] = to_string(s.status());
    if (s.status() == SessionStatus::satisfied) return out;
    out["expanded"] = std::vector<NodeId>(s.expanded().begin(), s.expanded().end());
    out["vertices"] = std::vector<VertexId>(s.subsystem().vertices().begin(), s.subsystem().vertices().end());
    ordered_json edges = ordered_json::array();
    for (const auto& [a, b] : s.subsystem().edges()) edges.push_back({a, b});
    out["edges"] = std::move(edges);
    out["trace"] = s.trace();
    out["iterations"] = s.iterations();
    return out;
}

} // namespace

ordered_json RefinementSession::export_json() const {
    ordered_json doc;
    doc["schema"] = session_schema;
    doc["model"] = {{"initial", model_->initial()}, {"tra", write_tra(*model_)}, {"lab", write_lab(*model_)}};
    doc["property"] = {{"comparison", prop_.comparison == Comparison::less_eq ? "le" : "lt"},
                       {"threshold", prop_.threshold},
                       {"target", prop_.target_label}};
    ordered_json budget = {{"max_steps", options_.search.budget.max_steps}};
    if (options_.search.budget.max_time) budget["max_time_ms"] = options_.search.budget.max_time->count();
    doc["options"] = {{"method", to_string(options_.method)},
                      {"state_closure", options_.search.state_closure},
                      {"budget", std::move(budget)},
                      {"tolerance", options_.search.solver.tolerance},
                      {"max_iterations", options_.search.solver.max_iterations}};
    ordered_json history = ordered_json::array();
    for (const auto& a : history_) {
        ordered_json entry = {{"action", action_name(a.kind)}};
        if (a.kind == SessionAction::Kind::concretize) entry["nodes"] = a.nodes;
        history.push_back(std::move(entry));
    }
    doc["history"] = std::move(history);
    doc["wall_seconds"] = wall_seconds_;
    doc["state"] = snapshot(*this);
    doc["report"] = report_to_json(report());
    return doc;
}

std::string RefinementSession::export_document() const { return export_json().dump(2) + "\n"; }

RefinementSession RefinementSession::import_document(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, std::string("session document is not JSON: ") + e.what());
    }
    return import_json(doc);
}

RefinementSession RefinementSession::import_json(const ordered_json& doc) {
    try {
        if (doc.value("schema", "") != session_schema)
            throw ParseError(0, "unsupported session schema, expected " + std::string(session_schema));
        const auto& m = doc.at("model");
        Dtmc model = parse_tra(m.at("tra").get<std::string>());
        model = parse_lab(m.at("lab").get<std::string>(), model).with_initial(m.at("initial").get<StateId>());
        require_valid(model);

        const auto& p = doc.at("property");
        ReachabilityProperty prop;
        const auto cmp = p.at("comparison").get<std::string>();
        if (cmp != "le" && cmp != "lt") throw ParseError(0, "unknown comparison '" + cmp + "'");
        prop.comparison = cmp == "le" ? Comparison::less_eq : Comparison::less;
        prop.threshold = p.at("threshold").get<double>();
        prop.target_label = p.at("target").get<std::string>();

        const auto& o = doc.at("options");
        SessionOptions options;
        const auto method = o.at("method").get<std::string>();
        if (method != "global" && method != "local") throw ParseError(0, "unknown method '" + method + "'");
        options.method = method == "global" ? SearchMethod::global : SearchMethod::local;
        options.search.state_closure = o.at("state_closure").get<bool>();
        const auto& b = o.at("budget");
        options.search.budget.max_steps = b.at("max_steps").get<std::size_t>();
        if (b.contains("max_time_ms"))
            options.search.budget.max_time = std::chrono::milliseconds(b.at("max_time_ms").get<std::int64_t>());
        options.search.solver.tolerance = o.at("tolerance").get<double>();
        options.search.solver.max_iterations = o.at("max_iterations").get<std::size_t>();

        auto session = create(std::make_shared<const Dtmc>(std::move(model)), prop, options);
        for (const auto& entry : doc.at("history")) {
            SessionAction action{action_kind(entry.at("action").get<std::string>()), {}};
            if (action.kind == SessionAction::Kind::concretize)
                action.nodes = entry.at("nodes").get<std::vector<NodeId>>();
            switch (action.kind) {
            case SessionAction::Kind::search: session.run_search(); break;
            case SessionAction::Kind::concretize: session.concretize(action.nodes); break;
            case SessionAction::Kind::reset: session.reset(); break;
            }
        }
        session.wall_seconds_ = doc.at("wall_seconds").get<double>();
        if (snapshot(session) != doc.at("state"))
            throw Error("session replay does not reproduce the exported state");
        return session;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("malformed session document: ") + e.what());
    }
}

} // namespace cexforge
