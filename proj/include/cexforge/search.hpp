#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cexforge/subsystem.hpp"

namespace cexforge {

struct Walk {
    std::vector<VertexId> vertices;
    double cost = 0.0;        // sum of edge costs, see cost_scale
    double probability = 1.0; // exp(-cost)
};

// Edge cost is -ln(prob) rounded to a multiple of 1/cost_scale. Walk costs
// are sums of these in fixed point, so they are exact and independent of
// summation order.
inline constexpr double cost_scale = 0x1p40;

// Walks with cost above this bound (probability below 1e-300) are pruned.
inline constexpr double max_walk_cost = 690.7755278982137;

// Lazy enumeration of source-to-target walks by nonincreasing probability,
// following the recursive enumeration algorithm of Jiménez and Marzal over
// -ln(prob) edge weights. Walks stop at the first target they visit. Equal
// costs are ordered lexicographically by vertex sequence.
//
// The graph must outlive the enumerator.
class PathEnumerator {
public:
    PathEnumerator(const Dtmc& graph, VertexId source, std::span<const VertexId> targets);

    // Next walk, or nothing once every walk has been produced.
    std::optional<Walk> next();
    std::size_t emitted() const noexcept { return emitted_; }

private:
    static constexpr std::uint32_t no_pred = 0xffffffffu;

    struct Entry {
        std::int64_t cost;
        std::uint32_t pred;
        std::uint32_t pred_rank;
        std::uint32_t length; // vertices on the walk
        std::int64_t edge;    // cost of the last edge
    };
    struct InEdge {
        std::uint32_t from;
        std::int64_t cost;
    };

    bool ensure(std::uint32_t v, std::size_t rank);
    void init_candidates(std::uint32_t v);
    void push_candidate(std::uint32_t v, std::uint32_t u, std::uint32_t rank, std::int64_t edge);
    void finish(std::uint32_t v);
    std::vector<std::uint32_t> sequence(std::uint32_t pred, std::uint32_t pred_rank, std::uint32_t v) const;
    bool walk_less(std::uint32_t v, const Entry& a, std::uint32_t w, const Entry& b) const;

    std::uint32_t source_;
    std::uint32_t sink_;
    std::vector<std::size_t> in_offsets_;
    std::vector<InEdge> in_edges_;
    std::vector<std::vector<Entry>> walks_;
    std::vector<std::vector<Entry>> candidates_;
    std::vector<std::uint8_t> initialized_;
    std::vector<std::uint8_t> exhausted_;
    std::size_t emitted_ = 0;
};

// Vertex sequence v0..vk (k >= 1) that starts in the subsystem, ends in the
// subsystem or at a target, and has its interior outside the subsystem. With
// k = 1 the edge must not be in the subsystem yet.
struct Fragment {
    std::vector<VertexId> vertices;
    double probability = 0.0;
};

// Most probable fragment, found by Dijkstra over -ln weights from every
// subsystem vertex at once. Edges leaving target vertices are ignored.
std::optional<Fragment> best_fragment(const View& view, const Subsystem& subsystem,
                                      const ReachabilityProperty& prop);

enum class SearchMethod { global, local };
enum class SearchOutcome { critical, budget_exhausted, no_progress };

std::string to_string(SearchMethod m);
std::string to_string(SearchOutcome o);

struct SearchBudget {
    std::size_t max_steps = 100'000; // paths (global) or fragments (local)
    std::optional<std::chrono::milliseconds> max_time;
};

struct SearchOptions {
    SearchBudget budget;
    // Close the subsystem under view edges after every step, so it is the
    // sub-DTMC induced by its states rather than by the collected edges.
    bool state_closure = false;
    SolverOptions solver;
};

struct SearchResult {
    Subsystem subsystem;
    // Subsystem probability after each step that changed it (and first the
    // starting subsystem's probability, when one was given).
    std::vector<double> trace;
    std::size_t iterations = 0;
    SearchOutcome outcome = SearchOutcome::no_progress;
    double wall_seconds = 0.0;
};

// Both searches grow `start` until it is critical. They throw UsageError
// when the property already holds on the view.
SearchResult global_search(const View& view, const ReachabilityProperty& prop,
                           const SearchOptions& options = {}, Subsystem start = {});
SearchResult local_search(const View& view, const ReachabilityProperty& prop,
                          const SearchOptions& options = {}, Subsystem start = {});
SearchResult run_search(SearchMethod method, const View& view, const ReachabilityProperty& prop,
                        const SearchOptions& options = {}, Subsystem start = {});

} // namespace cexforge
