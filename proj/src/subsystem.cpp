#include "cexforge/subsystem.hpp"

#include <algorithm>
#include <sstream>

#include "cexforge/ingest.hpp"

namespace cexforge {

bool Subsystem::add_vertex(VertexId v) {
    const bool grew = vertices_.insert(v).second;
    if (grew) invalidate();
    return grew;
}

bool Subsystem::add_edge(const Edge& e) {
    bool grew = vertices_.insert(e.first).second;
    grew |= vertices_.insert(e.second).second;
    grew |= edges_.insert(e).second;
    if (grew) invalidate();
    return grew;
}

bool Subsystem::add_walk(std::span<const VertexId> walk) {
    bool grew = false;
    if (!walk.empty()) grew |= add_vertex(walk.front());
    for (std::size_t i = 1; i < walk.size(); ++i) grew |= add_edge({walk[i - 1], walk[i]});
    return grew;
}

bool Subsystem::close_over(const View& view) {
    bool grew = false;
    for (VertexId v : vertices_) {
        for (const auto& t : view.graph().row(v))
            if (vertices_.contains(t.target)) grew |= edges_.insert({v, t.target}).second;
    }
    if (grew) invalidate();
    return grew;
}

InducedModel induce(const View& view, const Subsystem& subsystem, std::span<const VertexId> targets) {
    if (subsystem.empty()) throw UsageError("cannot induce a model from an empty subsystem");
    if (!subsystem.contains(view.initial()))
        throw UsageError("subsystem does not contain the initial vertex");
    const Dtmc& graph = view.graph();

    InducedModel out;
    out.view_vertex.assign(subsystem.vertices().begin(), subsystem.vertices().end());
    const std::size_t members = out.view_vertex.size();
    out.sink = static_cast<StateId>(members);
    auto local = [&](VertexId v) {
        return static_cast<StateId>(std::lower_bound(out.view_vertex.begin(), out.view_vertex.end(), v) -
                                    out.view_vertex.begin());
    };

    std::vector<std::vector<Transition>> rows(members + 1);
    for (std::size_t i = 0; i < members; ++i) {
        const VertexId v = out.view_vertex[i];
        if (std::binary_search(targets.begin(), targets.end(), v)) {
            rows[i] = {{static_cast<StateId>(i), 1.0}};
            continue;
        }
        double missing = 0.0;
        for (const auto& t : graph.row(v)) {
            if (subsystem.contains(Edge{v, t.target}))
                rows[i].push_back({local(t.target), t.prob});
            else
                missing += t.prob;
        }
        if (missing > 0.0) rows[i].push_back({out.sink, missing});
    }
    rows[members] = {{out.sink, 1.0}};

    Dtmc::Labels labels;
    for (const auto& [name, states] : graph.labels()) {
        auto& dst = labels[name];
        for (VertexId v : states)
            if (subsystem.contains(v)) dst.push_back(local(v));
    }
    out.model = Dtmc(members + 1, local(view.initial()), std::move(rows), std::move(labels));
    return out;
}

double probability(const View& view, Subsystem& subsystem, const ReachabilityProperty& prop,
                   const SolverOptions& options) {
    if (subsystem.cached_prob_) return *subsystem.cached_prob_;
    if (subsystem.empty()) {
        subsystem.cached_prob_ = 0.0;
        return 0.0;
    }
    const auto& view_targets = view.graph().states_with_label(prop.target_label);
    const InducedModel induced = induce(view, subsystem, view_targets);

    std::vector<StateId> local_targets;
    for (std::size_t i = 0; i + 1 < induced.model.num_states(); ++i)
        if (std::binary_search(view_targets.begin(), view_targets.end(), induced.view_vertex[i]))
            local_targets.push_back(static_cast<StateId>(i));

    auto& warm = subsystem.warm_;
    if (warm.size() != view.num_vertices()) warm.assign(view.num_vertices(), 0.0);
    if (local_targets.empty()) {
        subsystem.cached_prob_ = 0.0;
        return 0.0;
    }

    std::vector<double> start(induced.model.num_states(), 0.0);
    for (std::size_t i = 0; i < induced.view_vertex.size(); ++i) start[i] = warm[induced.view_vertex[i]];
    const auto solved = solve_reachability(induced.model, local_targets, options, start);
    for (std::size_t i = 0; i < induced.view_vertex.size(); ++i)
        warm[induced.view_vertex[i]] = solved.values[i];
    subsystem.cached_prob_ = solved.values[induced.model.initial()];
    return *subsystem.cached_prob_;
}

bool is_critical(const View& view, Subsystem& subsystem, const ReachabilityProperty& prop,
                 const SolverOptions& options) {
    return prop.violated_by(probability(view, subsystem, prop, options));
}

SubsystemStats stats(const Subsystem& subsystem, const View& view) {
    SubsystemStats out;
    out.vertices = subsystem.vertices().size();
    out.edges = subsystem.edges().size();
    out.probability = subsystem.cached_probability().value_or(0.0);
    std::set<StateId> covered;
    for (VertexId v : subsystem.vertices()) {
        if (view.vertex(v).kind == VertexKind::abstract) ++out.abstract_vertices;
        for (StateId s : view.covered_states(v)) covered.insert(s);
    }
    out.concrete_states = covered.size();
    return out;
}

std::string format_subsystem_tra(const View& view, const Subsystem& subsystem) {
    std::ostringstream out;
    for (VertexId v : subsystem.vertices()) {
        const auto& vertex = view.vertex(v);
        if (vertex.kind == VertexKind::abstract)
            out << "# abstract node " << vertex.node << " entry " << vertex.state << '\n';
    }
    const Dtmc& graph = view.graph();
    out << "STATES " << view.hierarchy()->model().num_states() << '\n';
    out << "TRANSITIONS " << subsystem.edges().size() << '\n';
    for (const auto& [src, dst] : subsystem.edges()) {
        double p = 0.0;
        for (const auto& t : graph.row(src))
            if (t.target == dst) p = t.prob;
        out << view.vertex(src).state << ' ' << view.vertex(dst).state << ' ' << format_probability(p) << '\n';
    }
    return out.str();
}

} // namespace cexforge
