#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cexforge/model.hpp"

namespace cexforge::detail {

// Iterative Tarjan over the rows of a Dtmc, restricted to an active vertex
// subset. The scratch arrays are sized to the whole model once and only the
// touched entries are reset, so repeated runs on small subsets stay cheap.
class SccFinder {
public:
    explicit SccFinder(const Dtmc& graph)
        : graph_(graph), index_(graph.num_states(), unvisited), lowlink_(graph.num_states(), 0),
          on_stack_(graph.num_states(), false) {}

    // Components of the subgraph induced by the vertices for which
    // `active(v)` holds, in reverse topological order (sink components
    // first). `vertices` lists the active vertices in the order DFS roots
    // are tried; members of each component appear in pop order.
    template <class Active>
    std::vector<std::vector<StateId>> run(std::span<const StateId> vertices, Active&& active) {
        std::vector<std::vector<StateId>> components;
        std::uint32_t counter = 0;
        for (StateId root : vertices) {
            if (index_[root] != unvisited) continue;
            push(root, counter);
            while (!frames_.empty()) {
                Frame& f = frames_.back();
                const auto row = graph_.row(f.vertex);
                if (f.next_edge < row.size()) {
                    const StateId w = row[f.next_edge++].target;
                    if (!active(w)) continue;
                    if (index_[w] == unvisited) {
                        push(w, counter);
                    } else if (on_stack_[w]) {
                        lowlink_[f.vertex] = std::min(lowlink_[f.vertex], index_[w]);
                    }
                    continue;
                }
                const StateId v = f.vertex;
                frames_.pop_back();
                if (!frames_.empty()) {
                    StateId parent = frames_.back().vertex;
                    lowlink_[parent] = std::min(lowlink_[parent], lowlink_[v]);
                }
                if (lowlink_[v] == index_[v]) {
                    std::vector<StateId> component;
                    StateId w;
                    do {
                        w = stack_.back();
                        stack_.pop_back();
                        on_stack_[w] = false;
                        component.push_back(w);
                    } while (w != v);
                    components.push_back(std::move(component));
                }
            }
        }
        for (StateId v : vertices) index_[v] = unvisited;
        return components;
    }

private:
    static constexpr std::uint32_t unvisited = std::numeric_limits<std::uint32_t>::max();

    struct Frame {
        StateId vertex;
        std::size_t next_edge;
    };

    void push(StateId v, std::uint32_t& counter) {
        index_[v] = lowlink_[v] = counter++;
        stack_.push_back(v);
        on_stack_[v] = true;
        frames_.push_back({v, 0});
    }

    const Dtmc& graph_;
    std::vector<std::uint32_t> index_;
    std::vector<std::uint32_t> lowlink_;
    std::vector<bool> on_stack_;
    std::vector<StateId> stack_;
    std::vector<Frame> frames_;
};

// Reverse adjacency in CSR form.
struct Predecessors {
    std::vector<std::size_t> offsets;
    std::vector<StateId> sources;

    explicit Predecessors(const Dtmc& graph) {
        const std::size_t n = graph.num_states();
        offsets.assign(n + 1, 0);
        for (StateId s = 0; s < n; ++s)
            for (const auto& t : graph.row(s)) ++offsets[t.target + 1];
        for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
        sources.resize(offsets[n]);
        std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
        for (StateId s = 0; s < n; ++s)
            for (const auto& t : graph.row(s)) sources[fill[t.target]++] = s;
    }

    std::span<const StateId> of(StateId v) const noexcept {
        return {sources.data() + offsets[v], sources.data() + offsets[v + 1]};
    }
};

} // namespace cexforge::detail
