#include <algorithm>
#include <cmath>
#include <limits>

#include "cexforge/search.hpp"

namespace cexforge {

namespace {

std::int64_t edge_cost(double prob) { return std::llround(-std::log(prob) * cost_scale); }

const std::int64_t max_cost_units = std::llround(max_walk_cost * cost_scale);

} // namespace

PathEnumerator::PathEnumerator(const Dtmc& graph, VertexId source, std::span<const VertexId> targets) {
    const std::size_t n = graph.num_states();
    if (source >= n) throw UsageError("source vertex out of range");
    source_ = source;
    sink_ = static_cast<std::uint32_t>(n);
    const auto is_target = state_mask(n, targets);

    // Reverse adjacency over n + 1 vertices; edges out of targets are cut
    // and replaced by a zero-cost edge into the virtual sink.
    in_offsets_.assign(n + 2, 0);
    for (StateId u = 0; u < n; ++u) {
        if (is_target[u]) {
            ++in_offsets_[sink_ + 1];
            continue;
        }
        for (const auto& t : graph.row(u)) ++in_offsets_[t.target + 1];
    }
    for (std::size_t i = 0; i + 1 < in_offsets_.size(); ++i) in_offsets_[i + 1] += in_offsets_[i];
    in_edges_.resize(in_offsets_.back());
    std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (StateId u = 0; u < n; ++u) {
        if (is_target[u]) {
            in_edges_[fill[sink_]++] = {u, 0};
            continue;
        }
        for (const auto& t : graph.row(u)) in_edges_[fill[t.target]++] = {u, edge_cost(t.prob)};
    }

    walks_.resize(n + 1);
    candidates_.resize(n + 1);
    initialized_.assign(n + 1, 0);
    exhausted_.assign(n + 1, 0);

    // Dijkstra for the best walk to every vertex, ordered by (cost, vertex
    // sequence), over the forward form of the cut graph.
    std::vector<std::size_t> out_offsets(n + 2, 0);
    for (const auto& e : in_edges_) ++out_offsets[e.from + 1];
    for (std::size_t i = 0; i + 1 < out_offsets.size(); ++i) out_offsets[i + 1] += out_offsets[i];
    std::vector<InEdge> out_edges(in_edges_.size()); // `from` holds the head here
    {
        std::vector<std::size_t> pos(out_offsets.begin(), out_offsets.end() - 1);
        for (std::uint32_t v = 0; v <= sink_; ++v)
            for (std::size_t k = in_offsets_[v]; k < in_offsets_[v + 1]; ++k)
                out_edges[pos[in_edges_[k].from]++] = {v, in_edges_[k].cost};
    }

    struct Item {
        std::uint32_t v;
        Entry entry;
    };
    std::vector<Item> heap;
    auto after = [this](const Item& a, const Item& b) { return walk_less(b.v, b.entry, a.v, a.entry); };
    std::vector<std::int64_t> best(n + 1, std::numeric_limits<std::int64_t>::max());
    heap.push_back({source_, {0, no_pred, 0, 1, 0}});
    best[source_] = 0;
    while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), after);
        const Item item = heap.back();
        heap.pop_back();
        if (!walks_[item.v].empty()) continue;
        walks_[item.v].push_back(item.entry);
        for (std::size_t k = out_offsets[item.v]; k < out_offsets[item.v + 1]; ++k) {
            const std::uint32_t w = out_edges[k].from;
            const std::int64_t cost = item.entry.cost + out_edges[k].cost;
            if (cost > max_cost_units || !walks_[w].empty() || cost > best[w]) continue;
            best[w] = cost;
            heap.push_back({w, {cost, item.v, 0, item.entry.length + 1, out_edges[k].cost}});
            std::push_heap(heap.begin(), heap.end(), after);
        }
    }
    for (std::uint32_t v = 0; v <= sink_; ++v)
        if (walks_[v].empty()) exhausted_[v] = 1;
}

std::vector<std::uint32_t> PathEnumerator::sequence(std::uint32_t pred, std::uint32_t pred_rank,
                                                    std::uint32_t v) const {
    std::vector<std::uint32_t> out{v};
    while (pred != no_pred) {
        out.push_back(pred);
        const Entry& e = walks_[pred][pred_rank];
        pred_rank = e.pred_rank;
        pred = e.pred;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

bool PathEnumerator::walk_less(std::uint32_t v, const Entry& a, std::uint32_t w, const Entry& b) const {
    if (a.cost != b.cost) return a.cost < b.cost;
    const auto sa = sequence(a.pred, a.pred_rank, v);
    const auto sb = sequence(b.pred, b.pred_rank, w);
    return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
}

void PathEnumerator::push_candidate(std::uint32_t v, std::uint32_t u, std::uint32_t rank, std::int64_t edge) {
    const Entry& via = walks_[u][rank];
    const std::int64_t cost = via.cost + edge;
    if (cost > max_cost_units) return;
    auto& heap = candidates_[v];
    heap.push_back({cost, u, rank, via.length + 1, edge});
    std::push_heap(heap.begin(), heap.end(),
                   [this, v](const Entry& a, const Entry& b) { return walk_less(v, b, v, a); });
}

void PathEnumerator::init_candidates(std::uint32_t v) {
    initialized_[v] = 1;
    const Entry& first = walks_[v].front();
    for (std::size_t k = in_offsets_[v]; k < in_offsets_[v + 1]; ++k) {
        const auto [u, cost] = in_edges_[k];
        if (walks_[u].empty()) continue;
        if (u == first.pred && first.pred_rank == 0) continue;
        push_candidate(v, u, 0, cost);
    }
}

void PathEnumerator::finish(std::uint32_t v) {
    auto& heap = candidates_[v];
    if (heap.empty()) {
        exhausted_[v] = 1;
        return;
    }
    std::pop_heap(heap.begin(), heap.end(),
                  [this, v](const Entry& a, const Entry& b) { return walk_less(v, b, v, a); });
    walks_[v].push_back(heap.back());
    heap.pop_back();
}

// Makes walks_[v][rank] available unless fewer walks exist. Ranks are
// produced in order, each one pulling at most one new candidate from the
// predecessor its previous walk went through.
bool PathEnumerator::ensure(std::uint32_t v, std::size_t rank) {
    struct Frame {
        std::uint32_t v;
        std::size_t rank;
        bool waiting;
        std::uint32_t u;
        std::uint32_t u_rank;
    };
    std::vector<Frame> stack{{v, rank, false, 0, 0}};
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (!f.waiting) {
            if (walks_[f.v].size() > f.rank || exhausted_[f.v]) {
                stack.pop_back();
                continue;
            }
            if (!initialized_[f.v]) init_candidates(f.v);
            const Entry& previous = walks_[f.v][f.rank - 1];
            if (previous.pred == no_pred) {
                finish(f.v);
                stack.pop_back();
                continue;
            }
            f.waiting = true;
            f.u = previous.pred;
            f.u_rank = previous.pred_rank + 1;
            if (walks_[f.u].size() <= f.u_rank && !exhausted_[f.u]) {
                const Frame child{f.u, f.u_rank, false, 0, 0};
                stack.push_back(child);
            }
            continue;
        }
        if (walks_[f.u].size() > f.u_rank)
            push_candidate(f.v, f.u, f.u_rank, walks_[f.v][f.rank - 1].edge);
        finish(f.v);
        stack.pop_back();
    }
    return walks_[v].size() > rank;
}

std::optional<Walk> PathEnumerator::next() {
    if (!ensure(sink_, emitted_)) return std::nullopt;
    const Entry& e = walks_[sink_][emitted_++];
    Walk walk;
    auto seq = sequence(e.pred, e.pred_rank, sink_);
    seq.pop_back();
    walk.vertices.assign(seq.begin(), seq.end());
    walk.cost = static_cast<double>(e.cost) / cost_scale;
    walk.probability = std::exp(-walk.cost);
    return walk;
}

} // namespace cexforge
