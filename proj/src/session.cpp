#include "cexforge/session.hpp"

#include <algorithm>

namespace cexforge {

std::string to_string(SessionStatus s) {
    switch (s) {
    case SessionStatus::satisfied: return "satisfied";
    case SessionStatus::searching: return "searching";
    case SessionStatus::critical: return "critical";
    case SessionStatus::budget_exhausted: return "budget_exhausted";
    }
    return "unknown";
}

RefinementSession RefinementSession::create(std::shared_ptr<const Dtmc> model, ReachabilityProperty prop,
                                            SessionOptions options) {
    if (!model) throw UsageError("null model");
    require_valid(*model);
    RefinementSession s;
    s.model_ = std::move(model);
    s.prop_ = std::move(prop);
    s.options_ = options;
    const Verdict verdict = check_property(*s.model_, s.prop_, options.search.solver);
    s.model_probability_ = verdict.probability;
    if (verdict.holds) {
        s.status_ = SessionStatus::satisfied;
        return s;
    }
    s.hierarchy_ = SccHierarchy::build(s.model_, target_states(*s.model_, s.prop_));
    s.initial_view_ = std::make_shared<const View>(build_view(s.hierarchy_));
    s.restart();
    return s;
}

const View& RefinementSession::view() const {
    if (!view_) throw UsageError("property holds; the session has no view");
    return *view_;
}

double RefinementSession::subsystem_probability() const {
    return subsystem_.cached_probability().value_or(0.0);
}

void RefinementSession::require_active(const char* action) const {
    if (status_ == SessionStatus::satisfied)
        throw UsageError(std::string("cannot ") + action + ": property holds, no counterexample");
}

void RefinementSession::restart() {
    expanded_.clear();
    view_ = initial_view_;
    subsystem_ = {};
    trace_.clear();
    iterations_ = 0;
    wall_seconds_ = 0.0;
    status_ = SessionStatus::searching;
}

void RefinementSession::refresh_status() {
    if (subsystem_.empty()) {
        status_ = SessionStatus::searching;
        return;
    }
    status_ = is_critical(*view_, subsystem_, prop_, options_.search.solver) ? SessionStatus::critical
                                                                            : SessionStatus::searching;
}

void RefinementSession::apply(const SessionAction& action) {
    switch (action.kind) {
    case SessionAction::Kind::search: apply_search(); break;
    case SessionAction::Kind::concretize: apply_concretize(action.nodes); break;
    case SessionAction::Kind::reset: apply_reset(); break;
    }
}

void RefinementSession::apply_search() {
    auto result = cexforge::run_search(options_.method, *view_, prop_, options_.search, subsystem_);
    subsystem_ = std::move(result.subsystem);
    trace_ = std::move(result.trace);
    iterations_ = result.iterations;
    wall_seconds_ = result.wall_seconds;
    status_ = result.outcome == SearchOutcome::critical ? SessionStatus::critical
                                                         : SessionStatus::budget_exhausted;
}

void RefinementSession::apply_concretize(const std::vector<NodeId>& nodes) {
    std::set<NodeId> expanded = expanded_;
    expanded.insert(nodes.begin(), nodes.end());
    auto next = std::make_shared<const View>(build_view(hierarchy_, expanded));
    Subsystem remapped = remap_subsystem(*view_, subsystem_, *next);
    if (options_.search.state_closure) remapped.close_over(*next);
    expanded_ = std::move(expanded);
    view_ = std::move(next);
    subsystem_ = std::move(remapped);
    refresh_status();
}

void RefinementSession::apply_reset() {
    subsystem_ = {};
    trace_.clear();
    iterations_ = 0;
    status_ = SessionStatus::searching;
}

void RefinementSession::run_search() {
    require_active("search");
    if (status_ != SessionStatus::searching)
        throw UsageError("cannot search in status " + to_string(status_));
    apply_search();
    history_.push_back({SessionAction::Kind::search, {}});
}

std::vector<NodeId> RefinementSession::validate_concretize(const std::vector<NodeId>& nodes) const {
    std::set<NodeId> fresh;
    for (NodeId id : nodes) {
        if (id >= hierarchy_->size()) throw UsageError("unknown node " + std::to_string(id));
        if (!expanded_.contains(id)) fresh.insert(id);
    }
    for (NodeId id : fresh) {
        const auto parent = hierarchy_->node(id).parent;
        if (parent && !expanded_.contains(*parent) && !fresh.contains(*parent))
            throw UsageError("node " + std::to_string(id) + " cannot be concretized before its parent " +
                             std::to_string(*parent));
    }
    return {fresh.begin(), fresh.end()};
}

void RefinementSession::concretize(const std::vector<NodeId>& nodes) {
    require_active("concretize");
    auto fresh = validate_concretize(nodes);
    if (fresh.empty()) return;
    apply_concretize(fresh);
    history_.push_back({SessionAction::Kind::concretize, std::move(fresh)});
}

void RefinementSession::reset() {
    require_active("reset");
    apply_reset();
    history_.push_back({SessionAction::Kind::reset, {}});
}

void RefinementSession::undo() {
    require_active("undo");
    if (history_.empty()) throw UsageError("nothing to undo");
    history_.pop_back();
    restart();
    for (const auto& action : history_) apply(action);
}

std::optional<NodeId> choose_max_mass(const RefinementSession& session) {
    const View& view = session.view();
    const auto& values = session.subsystem().last_solution();
    std::optional<NodeId> best;
    double best_value = -1.0;
    for (VertexId v : session.subsystem().vertices()) {
        const auto& vertex = view.vertex(v);
        if (vertex.kind != VertexKind::abstract) continue;
        const double value = v < values.size() ? values[v] : 0.0;
        if (value > best_value || (value == best_value && vertex.node < *best)) {
            best = vertex.node;
            best_value = value;
        }
    }
    return best;
}

void RefinementSession::auto_refine(const NodeChooser& choose) {
    require_active("refine");
    if (status_ != SessionStatus::critical)
        throw UsageError("automatic refinement needs a critical subsystem, status is " + to_string(status_));
    while (status_ != SessionStatus::budget_exhausted) {
        const auto node = choose(*this);
        if (!node) break;
        concretize({*node});
        if (status_ == SessionStatus::searching) run_search();
    }
}

void RefinementSession::auto_refine(RefinePolicy policy) {
    if (policy == RefinePolicy::mass_greedy) {
        auto_refine(NodeChooser(choose_max_mass));
        return;
    }
    require_active("refine");
    if (status_ != SessionStatus::critical)
        throw UsageError("automatic refinement needs a critical subsystem, status is " + to_string(status_));
    if (stats(subsystem_, *view_).abstract_vertices == 0) return;
    std::vector<NodeId> all;
    for (const auto& node : hierarchy_->nodes()) all.push_back(node.id);
    concretize(all);
    reset();
    run_search();
}

CounterexampleReport RefinementSession::report() const {
    CounterexampleReport r;
    r.property = prop_;
    r.holds = status_ == SessionStatus::satisfied;
    r.model_probability = model_probability_;
    r.model_states = model_->num_states();
    r.model_transitions = model_->num_transitions();
    if (r.holds) return r;
    r.status = to_string(status_);
    r.method = to_string(options_.method);
    r.view_vertices = view_->num_vertices();
    r.view_edges = view_->graph().num_transitions();
    r.expanded_nodes.assign(expanded_.begin(), expanded_.end());
    const SubsystemStats s = stats(subsystem_, *view_);
    r.subsystem_states = s.vertices;
    r.subsystem_concrete_states = s.concrete_states;
    r.subsystem_transitions = s.edges;
    r.subsystem_probability = s.probability;
    r.trace = trace_;
    r.iterations = iterations_;
    r.wall_time_seconds = wall_seconds_;
    r.subsystem_tra = format_subsystem_tra(*view_, subsystem_);
    return r;
}

Subsystem remap_subsystem(const View& old_view, const Subsystem& subsystem, const View& new_view) {
    Subsystem out;
    const auto& hierarchy = *new_view.hierarchy();
    const Dtmc& graph = new_view.graph();

    auto entry = [&](VertexId old) {
        auto v = new_view.vertex_of_state(old_view.vertex(old).state);
        if (!v) throw Error("remap lost a vertex");
        return *v;
    };
    auto opened = [&](VertexId old) {
        const auto& vertex = old_view.vertex(old);
        return vertex.kind == VertexKind::abstract && new_view.expanded().contains(vertex.node);
    };
    auto replacement = [&](VertexId old) {
        std::vector<VertexId> out_vertices;
        if (!opened(old)) {
            out_vertices.push_back(entry(old));
            return out_vertices;
        }
        for (StateId s : hierarchy.node(old_view.vertex(old).node).members)
            if (auto v = new_view.vertex_of_state(s)) out_vertices.push_back(*v);
        return out_vertices;
    };
    auto has_edge = [&](VertexId a, VertexId b) {
        const auto row = graph.row(a);
        return std::binary_search(row.begin(), row.end(), Transition{b, 0.0},
                                  [](const Transition& x, const Transition& y) { return x.target < y.target; });
    };

    std::set<NodeId> substituted;
    for (VertexId old : subsystem.vertices()) {
        const auto repl = replacement(old);
        for (VertexId v : repl) out.add_vertex(v);
        if (!opened(old) || !substituted.insert(old_view.vertex(old).node).second) continue;
        const std::set<VertexId> inside(repl.begin(), repl.end());
        for (VertexId v : repl)
            for (const auto& t : graph.row(v))
                if (inside.contains(t.target)) out.add_edge({v, t.target});
    }
    for (const auto& [a, b] : subsystem.edges()) {
        const VertexId head = entry(b);
        for (VertexId x : replacement(a))
            if (has_edge(x, head)) out.add_edge({x, head});
    }
    return out;
}

} // namespace cexforge
