#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "cexforge/model.hpp"
#include "cexforge/reachability.hpp"

namespace cexforge {

struct SccPartition {
    // Reverse topological order: every edge leaving components[i] ends in
    // some components[j] with j < i. Members are sorted.
    std::vector<std::vector<StateId>> components;
    std::vector<bool> nontrivial;
    std::vector<std::uint32_t> component_of;
};

// A component is non-trivial iff it has at least two states, or a single
// state with a self-loop of probability below 1. Absorbing states are
// always trivial.
SccPartition decompose_sccs(const Dtmc& graph);

using NodeId = std::uint32_t;

// Exit distribution of one input state of an SCC node.
struct AbstractRow {
    StateId input;
    std::vector<Transition> exits; // sorted by output state; zero entries absent

    friend bool operator==(const AbstractRow&, const AbstractRow&) = default;
};

struct SccNode {
    NodeId id = 0;
    std::optional<NodeId> parent;
    std::vector<StateId> members; // sorted
    std::vector<StateId> inputs;  // members entered from outside (and the initial state)
    std::vector<StateId> outputs; // non-members entered from a member
    std::vector<NodeId> children;
    std::size_t depth = 0;
};

// Exit probabilities from every input of `node` to every output, computed in
// the sub-DTMC on members ∪ outputs with the outputs made absorbing. Rows
// follow node.inputs.
std::vector<AbstractRow> abstract_transitions(const SccNode& node, const Dtmc& model,
                                              const SolverOptions& options = {});

// Reference route for abstract_transitions: one reachability solve per
// output instead of one visit-count solve per input.
std::vector<AbstractRow> abstract_transitions_by_output(const SccNode& node, const Dtmc& model,
                                                        const SolverOptions& options = {});

// Forest of nested non-trivial SCCs. Roots are the non-trivial SCCs of the
// model with the target states removed; the children of a node are the
// non-trivial SCCs of its members minus its inputs.
//
// Abstract transitions are computed on first use and cached; the cache is
// filled at most once per node and is safe to read from several threads.
class SccHierarchy {
public:
    static std::shared_ptr<const SccHierarchy> build(std::shared_ptr<const Dtmc> model,
                                                     std::span<const StateId> targets = {},
                                                     const SolverOptions& options = abstraction_solver());

    // Tighter than the default so abstraction error stays well below the
    // 1e-8 exactness budget.
    static SolverOptions abstraction_solver() { return {1e-13, 1'000'000}; }

    const Dtmc& model() const noexcept { return *model_; }
    const std::shared_ptr<const Dtmc>& model_ptr() const noexcept { return model_; }
    std::span<const StateId> targets() const noexcept { return targets_; }

    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }
    const std::vector<NodeId>& roots() const noexcept { return roots_; }
    const SccNode& node(NodeId id) const;
    const std::vector<SccNode>& nodes() const noexcept { return nodes_; }

    // Deepest node containing `s`, if any.
    std::optional<NodeId> home(StateId s) const;
    std::size_t depth() const noexcept { return depth_; }

    const std::vector<AbstractRow>& abstract_rows(NodeId id) const;

    SccHierarchy(const SccHierarchy&) = delete;
    SccHierarchy& operator=(const SccHierarchy&) = delete;

private:
    SccHierarchy() = default;

    std::shared_ptr<const Dtmc> model_;
    std::vector<StateId> targets_;
    SolverOptions solver_;
    std::vector<SccNode> nodes_;
    std::vector<NodeId> roots_;
    std::vector<std::uint32_t> home_; // node id + 1, 0 = none
    std::size_t depth_ = 0;

    mutable std::unique_ptr<std::once_flag[]> once_;
    mutable std::vector<std::vector<AbstractRow>> rows_;
};

using HierarchyPtr = std::shared_ptr<const SccHierarchy>;

enum class VertexKind { concrete, abstract };

// A view vertex is a concrete state, or the entry `state` of the collapsed
// node `node`.
struct ViewVertex {
    VertexKind kind = VertexKind::concrete;
    StateId state = 0;
    NodeId node = 0; // meaningful for abstract vertices only

    friend auto operator<=>(const ViewVertex&, const ViewVertex&) = default;
};

using VertexId = std::uint32_t;

// Mixed concrete/abstract graph determined by a set of expanded nodes.
// Vertices are numbered by the state they stand for, so with every node
// expanded vertex i is state i and graph() equals the model.
class View {
public:
    const Dtmc& graph() const noexcept { return graph_; }
    const HierarchyPtr& hierarchy() const noexcept { return hierarchy_; }
    const std::set<NodeId>& expanded() const noexcept { return expanded_; }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    const ViewVertex& vertex(VertexId v) const { return vertices_.at(v); }
    const std::vector<ViewVertex>& vertices() const noexcept { return vertices_; }
    VertexId initial() const noexcept { return graph_.initial(); }

    // Vertex standing for state `s`, or none if `s` is hidden inside a
    // collapsed node.
    std::optional<VertexId> vertex_of_state(StateId s) const;
    std::optional<VertexId> find(const ViewVertex& v) const;

    // Concrete states a vertex stands for: the state itself, or every member
    // of the collapsed node.
    std::span<const StateId> covered_states(VertexId v) const;

    bool fully_concrete() const noexcept { return abstract_count_ == 0; }

private:
    friend View build_view(const HierarchyPtr& hierarchy, const std::set<NodeId>& expanded);

    HierarchyPtr hierarchy_;
    std::set<NodeId> expanded_;
    std::vector<ViewVertex> vertices_;
    std::vector<std::int64_t> vertex_of_state_;
    Dtmc graph_;
    std::size_t abstract_count_ = 0;
};

// Nodes in `expanded` must have their parent expanded too (parent-first).
View build_view(const HierarchyPtr& hierarchy, const std::set<NodeId>& expanded = {});

// Nodes whose parent is expanded (or that are roots) but which are not
// expanded themselves.
std::vector<NodeId> expandable_nodes(const SccHierarchy& hierarchy, const std::set<NodeId>& expanded);

} // namespace cexforge
