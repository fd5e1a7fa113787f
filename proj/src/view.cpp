#include <algorithm>

#include "cexforge/scc.hpp"

namespace cexforge {

View build_view(const HierarchyPtr& hierarchy, const std::set<NodeId>& expanded) {
    if (!hierarchy) throw UsageError("null hierarchy");
    const SccHierarchy& h = *hierarchy;
    const Dtmc& model = h.model();
    for (NodeId id : expanded) {
        const SccNode& node = h.node(id);
        if (node.parent && !expanded.contains(*node.parent))
            throw UsageError("node " + std::to_string(id) + " cannot be expanded before its parent " +
                             std::to_string(*node.parent));
    }

    View view;
    view.hierarchy_ = hierarchy;
    view.expanded_ = expanded;
    const std::size_t n = model.num_states();
    view.vertex_of_state_.assign(n, -1);

    for (StateId s = 0; s < n; ++s) {
        // The outermost collapsed node on the chain decides visibility.
        std::optional<NodeId> collapsed;
        for (auto id = h.home(s); id; id = h.nodes()[*id].parent)
            if (!expanded.contains(*id)) collapsed = id;
        ViewVertex vertex{VertexKind::concrete, s, 0};
        if (collapsed) {
            const auto& inputs = h.nodes()[*collapsed].inputs;
            if (!std::binary_search(inputs.begin(), inputs.end(), s)) continue;
            vertex = {VertexKind::abstract, s, *collapsed};
            ++view.abstract_count_;
        }
        view.vertex_of_state_[s] = static_cast<std::int64_t>(view.vertices_.size());
        view.vertices_.push_back(vertex);
    }

    auto vertex_id = [&](StateId s) {
        const auto v = view.vertex_of_state_[s];
        if (v < 0) throw Error("state " + std::to_string(s) + " is hidden but has a visible predecessor");
        return static_cast<StateId>(v);
    };

    std::vector<std::vector<Transition>> rows(view.vertices_.size());
    for (std::size_t v = 0; v < view.vertices_.size(); ++v) {
        const ViewVertex& vertex = view.vertices_[v];
        if (vertex.kind == VertexKind::concrete) {
            for (const auto& t : model.row(vertex.state)) rows[v].push_back({vertex_id(t.target), t.prob});
            continue;
        }
        const auto& abstract = h.abstract_rows(vertex.node);
        auto it = std::find_if(abstract.begin(), abstract.end(),
                               [&](const AbstractRow& r) { return r.input == vertex.state; });
        if (it == abstract.end() || it->exits.empty()) {
            // Closed node: the mass stays inside forever.
            rows[v].push_back({static_cast<StateId>(v), 1.0});
            continue;
        }
        for (const auto& e : it->exits) rows[v].push_back({vertex_id(e.target), e.prob});
    }

    Dtmc::Labels labels;
    for (const auto& [name, states] : model.labels()) {
        auto& out = labels[name];
        for (StateId s : states)
            if (view.vertex_of_state_[s] >= 0) out.push_back(static_cast<StateId>(view.vertex_of_state_[s]));
    }
    view.graph_ = Dtmc(view.vertices_.size(), vertex_id(model.initial()), std::move(rows), std::move(labels));
    return view;
}

std::optional<VertexId> View::vertex_of_state(StateId s) const {
    if (s >= vertex_of_state_.size() || vertex_of_state_[s] < 0) return std::nullopt;
    return static_cast<VertexId>(vertex_of_state_[s]);
}

std::optional<VertexId> View::find(const ViewVertex& v) const {
    auto id = vertex_of_state(v.state);
    if (id && vertices_[*id] == v) return id;
    return std::nullopt;
}

std::span<const StateId> View::covered_states(VertexId v) const {
    const ViewVertex& vertex = vertices_.at(v);
    if (vertex.kind == VertexKind::concrete) return {&vertex.state, 1};
    return hierarchy_->node(vertex.node).members;
}

} // namespace cexforge
