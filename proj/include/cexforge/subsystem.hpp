#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cexforge/reachability.hpp"
#include "cexforge/scc.hpp"

namespace cexforge {

using Edge = std::pair<VertexId, VertexId>;

// A set of view vertices and view edges. Edges are tracked explicitly so the
// subsystem only contains transitions some search step justified.
class Subsystem {
public:
    bool empty() const noexcept { return vertices_.empty(); }
    const std::set<VertexId>& vertices() const noexcept { return vertices_; }
    const std::set<Edge>& edges() const noexcept { return edges_; }
    bool contains(VertexId v) const { return vertices_.contains(v); }
    bool contains(const Edge& e) const { return edges_.contains(e); }

    // Each mutator returns true iff the subsystem grew.
    bool add_vertex(VertexId v);
    bool add_edge(const Edge& e);
    bool add_walk(std::span<const VertexId> walk);
    // Adds every view edge whose endpoints are both members.
    bool close_over(const View& view);

    std::optional<double> cached_probability() const noexcept { return cached_prob_; }
    // Last solution vector, indexed by view vertex; empty if never solved.
    const std::vector<double>& last_solution() const noexcept { return warm_; }

    friend bool operator==(const Subsystem& a, const Subsystem& b) {
        return a.vertices_ == b.vertices_ && a.edges_ == b.edges_;
    }

private:
    friend double probability(const View&, Subsystem&, const ReachabilityProperty&, const SolverOptions&);

    void invalidate() noexcept { cached_prob_.reset(); }

    std::set<VertexId> vertices_;
    std::set<Edge> edges_;
    std::optional<double> cached_prob_;
    std::vector<double> warm_;
};

// Induced model: member vertices (ascending) followed by one absorbing sink
// that receives each member's missing row mass. Members listed in the
// sorted `targets` become absorbing. Labels are carried over.
struct InducedModel {
    Dtmc model;
    std::vector<VertexId> view_vertex; // local index -> view vertex
    StateId sink = 0;
};

InducedModel induce(const View& view, const Subsystem& subsystem, std::span<const VertexId> targets = {});

// Pr(init |= F T) in the induced model. Warm-starts from, and refreshes,
// the subsystem's cached solution.
double probability(const View& view, Subsystem& subsystem, const ReachabilityProperty& prop,
                   const SolverOptions& options = {});

bool is_critical(const View& view, Subsystem& subsystem, const ReachabilityProperty& prop,
                 const SolverOptions& options = {});

struct SubsystemStats {
    std::size_t vertices = 0;
    std::size_t concrete_states = 0;
    std::size_t edges = 0;
    std::size_t abstract_vertices = 0;
    double probability = 0.0;
};

// Probability is taken from the cache (0 if the subsystem was never solved).
SubsystemStats stats(const Subsystem& subsystem, const View& view);

// Subsystem edges in .tra layout, with vertices written as the state they
// stand for. Abstract vertices are listed in leading comments.
std::string format_subsystem_tra(const View& view, const Subsystem& subsystem);

} // namespace cexforge
