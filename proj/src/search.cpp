#include <algorithm>
#include <cmath>
#include <limits>

#include "cexforge/search.hpp"

namespace cexforge {

namespace {

constexpr std::uint32_t none = std::numeric_limits<std::uint32_t>::max();

class Clock {
public:
    explicit Clock(const SearchBudget& budget)
        : start_(std::chrono::steady_clock::now()), limit_(budget.max_time) {}

    bool expired() const {
        return limit_ && std::chrono::steady_clock::now() - start_ >= *limit_;
    }
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
    std::optional<std::chrono::milliseconds> limit_;
};

void require_violated(const View& view, const ReachabilityProperty& prop, const SolverOptions& solver) {
    if (check_property(view.graph(), prop, solver).holds)
        throw UsageError("property holds on the view; there is no counterexample to search for");
}

bool grow(Subsystem& subsystem, std::span<const VertexId> vertices, const View& view,
          const SearchOptions& options) {
    bool grew = subsystem.add_walk(vertices);
    if (options.state_closure) grew |= subsystem.close_over(view);
    return grew;
}

} // namespace

std::string to_string(SearchMethod m) { return m == SearchMethod::global ? "global" : "local"; }

std::string to_string(SearchOutcome o) {
    switch (o) {
    case SearchOutcome::critical: return "critical";
    case SearchOutcome::budget_exhausted: return "budget_exhausted";
    case SearchOutcome::no_progress: return "no_progress";
    }
    return "unknown";
}

std::optional<Fragment> best_fragment(const View& view, const Subsystem& subsystem,
                                      const ReachabilityProperty& prop) {
    if (subsystem.empty()) throw UsageError("best_fragment needs a non-empty subsystem");
    const Dtmc& graph = view.graph();
    const std::size_t n = graph.num_states();
    const auto is_target = state_mask(n, graph.states_with_label(prop.target_label));
    std::vector<bool> member(n, false);
    for (VertexId v : subsystem.vertices()) member[v] = true;

    // pred[v] for settled outside vertices; the chain ends at a member.
    std::vector<std::uint32_t> pred(n, none);
    std::vector<bool> settled(n, false);
    std::vector<double> best_cost(n, std::numeric_limits<double>::infinity());

    auto path_to = [&](std::uint32_t last) {
        std::vector<VertexId> seq{last};
        while (!member[seq.back()]) seq.push_back(pred[seq.back()]);
        std::reverse(seq.begin(), seq.end());
        return seq;
    };
    // Sequence ending with the edge from -> to, where `from` is settled or a member.
    auto sequence = [&](std::uint32_t from, std::uint32_t to) {
        auto seq = path_to(from);
        seq.push_back(to);
        return seq;
    };

    struct Step {
        double cost;
        std::uint32_t from;
        std::uint32_t to;
    };
    auto less = [&](const Step& a, const Step& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        const auto sa = sequence(a.from, a.to);
        const auto sb = sequence(b.from, b.to);
        return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
    };
    auto after = [&](const Step& a, const Step& b) { return less(b, a); };

    std::optional<Step> best;
    std::vector<Step> heap;
    auto offer = [&](const Step& step) {
        if (step.cost > max_walk_cost) return;
        if (member[step.to] || is_target[step.to]) {
            if (!best || less(step, *best)) best = step;
            return;
        }
        if (settled[step.to] || step.cost > best_cost[step.to]) return;
        best_cost[step.to] = step.cost;
        heap.push_back(step);
        std::push_heap(heap.begin(), heap.end(), after);
    };

    for (VertexId u : subsystem.vertices()) {
        if (is_target[u]) continue;
        for (const auto& t : graph.row(u)) {
            if (member[t.target] && subsystem.contains(Edge{u, t.target})) continue;
            offer({-std::log(t.prob), u, t.target});
        }
    }
    while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), after);
        const Step step = heap.back();
        heap.pop_back();
        if (best && step.cost > best->cost) break;
        if (settled[step.to]) continue;
        settled[step.to] = true;
        pred[step.to] = step.from;
        if (is_target[step.to]) continue;
        for (const auto& t : graph.row(step.to)) offer({step.cost - std::log(t.prob), step.to, t.target});
    }
    if (!best) return std::nullopt;
    return Fragment{sequence(best->from, best->to), std::exp(-best->cost)};
}

SearchResult global_search(const View& view, const ReachabilityProperty& prop,
                           const SearchOptions& options, Subsystem start) {
    require_violated(view, prop, options.solver);
    const Clock clock(options.budget);
    SearchResult result;
    result.subsystem = std::move(start);
    Subsystem& sub = result.subsystem;
    if (!sub.empty()) result.trace.push_back(probability(view, sub, prop, options.solver));

    PathEnumerator paths(view.graph(), view.initial(), view.graph().states_with_label(prop.target_label));
    for (;;) {
        if (!sub.empty() && is_critical(view, sub, prop, options.solver)) {
            result.outcome = SearchOutcome::critical;
            break;
        }
        if (result.iterations >= options.budget.max_steps || clock.expired()) {
            result.outcome = SearchOutcome::budget_exhausted;
            break;
        }
        auto walk = paths.next();
        if (!walk) {
            result.outcome = SearchOutcome::no_progress;
            break;
        }
        ++result.iterations;
        if (grow(sub, walk->vertices, view, options))
            result.trace.push_back(probability(view, sub, prop, options.solver));
    }
    result.wall_seconds = clock.seconds();
    return result;
}

SearchResult local_search(const View& view, const ReachabilityProperty& prop,
                          const SearchOptions& options, Subsystem start) {
    require_violated(view, prop, options.solver);
    const Clock clock(options.budget);
    SearchResult result;
    result.subsystem = std::move(start);
    Subsystem& sub = result.subsystem;
    if (!sub.empty()) {
        result.trace.push_back(probability(view, sub, prop, options.solver));
    } else {
        PathEnumerator paths(view.graph(), view.initial(),
                             view.graph().states_with_label(prop.target_label));
        auto seed = paths.next();
        if (!seed) {
            result.outcome = SearchOutcome::no_progress;
            result.wall_seconds = clock.seconds();
            return result;
        }
        ++result.iterations;
        grow(sub, seed->vertices, view, options);
        result.trace.push_back(probability(view, sub, prop, options.solver));
    }
    for (;;) {
        if (is_critical(view, sub, prop, options.solver)) {
            result.outcome = SearchOutcome::critical;
            break;
        }
        if (result.iterations >= options.budget.max_steps || clock.expired()) {
            result.outcome = SearchOutcome::budget_exhausted;
            break;
        }
        auto fragment = best_fragment(view, sub, prop);
        if (!fragment) {
            result.outcome = SearchOutcome::no_progress;
            break;
        }
        ++result.iterations;
        if (grow(sub, fragment->vertices, view, options))
            result.trace.push_back(probability(view, sub, prop, options.solver));
    }
    result.wall_seconds = clock.seconds();
    return result;
}

SearchResult run_search(SearchMethod method, const View& view, const ReachabilityProperty& prop,
                        const SearchOptions& options, Subsystem start) {
    return method == SearchMethod::global ? global_search(view, prop, options, std::move(start))
                                          : local_search(view, prop, options, std::move(start));
}

} // namespace cexforge
