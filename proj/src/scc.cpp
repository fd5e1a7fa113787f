#include "cexforge/scc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "cexforge/detail/tarjan.hpp"

namespace cexforge {

namespace {

bool has_proper_self_loop(const Dtmc& graph, StateId s) {
    for (const auto& t : graph.row(s))
        if (t.target == s) return t.prob < 1.0;
    return false;
}

bool is_nontrivial(const Dtmc& graph, const std::vector<StateId>& component) {
    return component.size() > 1 || has_proper_self_loop(graph, component.front());
}

// Local numbering of a node: members first, then outputs.
struct LocalIndex {
    std::vector<std::int64_t> local; // per model state, -1 if outside
    std::size_t num_members = 0;

    LocalIndex(const SccNode& node, std::size_t n) : local(n, -1), num_members(node.members.size()) {
        for (std::size_t i = 0; i < node.members.size(); ++i) local[node.members[i]] = static_cast<std::int64_t>(i);
        for (std::size_t j = 0; j < node.outputs.size(); ++j)
            local[node.outputs[j]] = static_cast<std::int64_t>(num_members + j);
    }
};

void normalize(std::vector<AbstractRow>& rows) {
    for (auto& row : rows) {
        double total = 0.0;
        for (const auto& e : row.exits) total += e.prob;
        if (total > 0.0)
            for (auto& e : row.exits) e.prob /= total;
    }
}

// Local CSR of a node: member-to-member edges and member-to-output edges.
struct LocalGraph {
    struct Arc {
        std::uint32_t to;
        double prob;
    };
    std::vector<std::size_t> inner_offsets{0}, exit_offsets{0};
    std::vector<Arc> inner, exits;

    LocalGraph(const SccNode& node, const Dtmc& model, const LocalIndex& index, bool reversed) {
        const std::size_t k = node.members.size();
        if (reversed) {
            // inner arcs grouped by head: for member q, every p with p -> q
            std::vector<std::size_t> count(k + 1, 0);
            for (std::size_t p = 0; p < k; ++p)
                for (const auto& t : model.row(node.members[p])) {
                    const auto l = static_cast<std::size_t>(index.local[t.target]);
                    if (l < k) ++count[l + 1];
                }
            for (std::size_t q = 0; q < k; ++q) count[q + 1] += count[q];
            inner_offsets = count;
            inner.resize(count[k]);
            for (std::size_t p = 0; p < k; ++p)
                for (const auto& t : model.row(node.members[p])) {
                    const auto l = static_cast<std::size_t>(index.local[t.target]);
                    if (l < k) inner[count[l]++] = {static_cast<std::uint32_t>(p), t.prob};
                }
        }
        for (std::size_t p = 0; p < k; ++p) {
            for (const auto& t : model.row(node.members[p])) {
                const auto l = static_cast<std::size_t>(index.local[t.target]);
                if (l >= k)
                    exits.push_back({static_cast<std::uint32_t>(l - k), t.prob});
                else if (!reversed)
                    inner.push_back({static_cast<std::uint32_t>(l), t.prob});
            }
            if (!reversed) inner_offsets.push_back(inner.size());
            exit_offsets.push_back(exits.size());
        }
    }
};

// Right-hand sides solved together per Gauss-Seidel sweep.
constexpr std::size_t batch = 8;

// Gauss-Seidel on x = A x + b for `batch` right-hand sides at once, with A
// given row-wise by `offsets`/`arcs`. `x` and `b` are k * batch, row-major.
void sweep_until_converged(const std::vector<std::size_t>& offsets, const std::vector<LocalGraph::Arc>& arcs,
                           const std::vector<double>& b, std::vector<double>& x, const SolverOptions& options,
                           NodeId node) {
    const std::size_t k = offsets.size() - 1;
    std::size_t sweeps = 0;
    double change;
    do {
        if (sweeps++ == options.max_iterations)
            throw SolverError("abstraction of node " + std::to_string(node) + " did not converge", ProbVector{});
        change = 0.0;
        double scale = 1.0;
        for (std::size_t p = 0; p < k; ++p) {
            double acc[batch];
            for (std::size_t c = 0; c < batch; ++c) acc[c] = b[p * batch + c];
            for (std::size_t a = offsets[p]; a < offsets[p + 1]; ++a) {
                const double* xq = &x[arcs[a].to * batch];
                const double w = arcs[a].prob;
                for (std::size_t c = 0; c < batch; ++c) acc[c] += w * xq[c];
            }
            double* xp = &x[p * batch];
            for (std::size_t c = 0; c < batch; ++c) {
                change = std::max(change, std::abs(acc[c] - xp[c]));
                scale = std::max(scale, acc[c]);
                xp[c] = acc[c];
            }
        }
        change /= scale;
    } while (change > options.tolerance);
}

// Reachability of each output within the node: x = Q x + R e_o.
std::vector<AbstractRow> rows_by_output(const SccNode& node, const Dtmc& model, const SolverOptions& options) {
    const LocalIndex index(node, model.num_states());
    const LocalGraph g(node, model, index, false);
    const std::size_t k = node.members.size();
    const std::size_t m = node.outputs.size();

    std::vector<AbstractRow> rows;
    for (StateId input : node.inputs) rows.push_back({input, {}});
    std::vector<double> x(k * batch), b(k * batch);
    for (std::size_t first = 0; first < m; first += batch) {
        std::fill(x.begin(), x.end(), 0.0);
        std::fill(b.begin(), b.end(), 0.0);
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t a = g.exit_offsets[p]; a < g.exit_offsets[p + 1]; ++a) {
                const std::size_t j = g.exits[a].to;
                if (j >= first && j < first + batch) b[p * batch + (j - first)] += g.exits[a].prob;
            }
        sweep_until_converged(g.inner_offsets, g.inner, b, x, options, node.id);
        for (std::size_t r = 0; r < node.inputs.size(); ++r) {
            const auto p = static_cast<std::size_t>(index.local[node.inputs[r]]);
            for (std::size_t c = 0; c < batch && first + c < m; ++c)
                if (x[p * batch + c] > 0.0) rows[r].exits.push_back({node.outputs[first + c], x[p * batch + c]});
        }
    }
    return rows;
}

// Expected visits from each input: x = e_i + Q^T x, exits = R^T x.
std::vector<AbstractRow> rows_by_input(const SccNode& node, const Dtmc& model, const SolverOptions& options) {
    const LocalIndex index(node, model.num_states());
    const LocalGraph g(node, model, index, true);
    const std::size_t k = node.members.size();
    const std::size_t m = node.outputs.size();
    const std::size_t num_inputs = node.inputs.size();

    std::vector<AbstractRow> rows;
    std::vector<double> x(k * batch), b(k * batch), exit(m * batch);
    for (std::size_t first = 0; first < num_inputs; first += batch) {
        std::fill(x.begin(), x.end(), 0.0);
        std::fill(b.begin(), b.end(), 0.0);
        for (std::size_t c = 0; c < batch && first + c < num_inputs; ++c)
            b[static_cast<std::size_t>(index.local[node.inputs[first + c]]) * batch + c] = 1.0;
        sweep_until_converged(g.inner_offsets, g.inner, b, x, options, node.id);

        std::fill(exit.begin(), exit.end(), 0.0);
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t a = g.exit_offsets[p]; a < g.exit_offsets[p + 1]; ++a)
                for (std::size_t c = 0; c < batch; ++c)
                    exit[g.exits[a].to * batch + c] += x[p * batch + c] * g.exits[a].prob;
        for (std::size_t c = 0; c < batch && first + c < num_inputs; ++c) {
            AbstractRow row{node.inputs[first + c], {}};
            for (std::size_t j = 0; j < m; ++j)
                if (exit[j * batch + c] > 0.0) row.exits.push_back({node.outputs[j], exit[j * batch + c]});
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace

SccPartition decompose_sccs(const Dtmc& graph) {
    const std::size_t n = graph.num_states();
    std::vector<StateId> all(n);
    for (StateId s = 0; s < n; ++s) all[s] = s;
    detail::SccFinder finder(graph);
    SccPartition out;
    out.components = finder.run(all, [](StateId) { return true; });
    out.component_of.assign(n, 0);
    for (std::size_t c = 0; c < out.components.size(); ++c) {
        auto& comp = out.components[c];
        std::sort(comp.begin(), comp.end());
        out.nontrivial.push_back(is_nontrivial(graph, comp));
        for (StateId s : comp) out.component_of[s] = static_cast<std::uint32_t>(c);
    }
    return out;
}

std::vector<AbstractRow> abstract_transitions_by_output(const SccNode& node, const Dtmc& model,
                                                        const SolverOptions& options) {
    const LocalIndex index(node, model.num_states());
    const std::size_t k = node.members.size();
    const std::size_t size = k + node.outputs.size();
    std::vector<std::vector<Transition>> local_rows(size);
    for (std::size_t p = 0; p < k; ++p)
        for (const auto& t : model.row(node.members[p]))
            local_rows[p].push_back({static_cast<StateId>(index.local[t.target]), t.prob});
    for (std::size_t j = k; j < size; ++j) local_rows[j] = {{static_cast<StateId>(j), 1.0}};
    const Dtmc sub(size, 0, std::move(local_rows));

    std::vector<AbstractRow> rows;
    for (StateId input : node.inputs) rows.push_back({input, {}});
    for (std::size_t j = 0; j < node.outputs.size(); ++j) {
        const StateId target = static_cast<StateId>(k + j);
        const auto solved = solve_reachability(sub, std::span(&target, 1), options);
        for (std::size_t r = 0; r < node.inputs.size(); ++r) {
            const double p = solved.values[static_cast<std::size_t>(index.local[node.inputs[r]])];
            if (p > 0.0) rows[r].exits.push_back({node.outputs[j], p});
        }
    }
    return rows;
}

std::vector<AbstractRow> abstract_transitions(const SccNode& node, const Dtmc& model,
                                              const SolverOptions& options) {
    std::vector<AbstractRow> rows = node.outputs.size() < node.inputs.size()
                                        ? rows_by_output(node, model, options)
                                        : rows_by_input(node, model, options);
    // A strongly connected node with at least one exit is left almost
    // surely, so each row is a distribution; renormalizing removes the
    // truncation error of the iterative solve.
    normalize(rows);
    return rows;
}

std::shared_ptr<const SccHierarchy> SccHierarchy::build(std::shared_ptr<const Dtmc> model,
                                                        std::span<const StateId> targets,
                                                        const SolverOptions& options) {
    if (!model) throw UsageError("null model");
    std::shared_ptr<SccHierarchy> h(new SccHierarchy());
    const Dtmc& graph = *model;
    const std::size_t n = graph.num_states();
    h->model_ = std::move(model);
    h->targets_.assign(targets.begin(), targets.end());
    std::sort(h->targets_.begin(), h->targets_.end());
    h->targets_.erase(std::unique(h->targets_.begin(), h->targets_.end()), h->targets_.end());
    h->solver_ = options;
    h->home_.assign(n, 0);

    const auto is_target = state_mask(n, h->targets_);
    const detail::Predecessors preds(graph);
    detail::SccFinder finder(graph);

    struct Pending {
        std::vector<StateId> members;
        std::optional<NodeId> parent;
    };
    std::deque<Pending> queue;
    NodeId next_id = 0;

    auto enqueue = [&](std::vector<std::vector<StateId>> comps, std::optional<NodeId> parent) {
        std::vector<std::vector<StateId>> kept;
        for (auto& comp : comps) {
            std::sort(comp.begin(), comp.end());
            if (is_nontrivial(graph, comp)) kept.push_back(std::move(comp));
        }
        std::sort(kept.begin(), kept.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
        std::vector<NodeId> ids;
        for (auto& comp : kept) {
            ids.push_back(next_id++);
            queue.push_back({std::move(comp), parent});
        }
        return ids;
    };

    std::vector<StateId> eligible;
    for (StateId s = 0; s < n; ++s)
        if (!is_target[s]) eligible.push_back(s);
    h->roots_ = enqueue(finder.run(eligible, [&](StateId v) { return !is_target[v]; }), std::nullopt);

    std::vector<std::uint32_t> tag(n, 0);
    std::vector<bool> is_input(n, false);
    while (!queue.empty()) {
        Pending pending = std::move(queue.front());
        queue.pop_front();
        SccNode node;
        node.id = static_cast<NodeId>(h->nodes_.size());
        node.parent = pending.parent;
        node.depth = pending.parent ? h->nodes_[*pending.parent].depth + 1 : 0;
        node.members = std::move(pending.members);
        const std::uint32_t stamp = node.id + 1;
        for (StateId s : node.members) {
            tag[s] = stamp;
            h->home_[s] = stamp;
        }
        for (StateId s : node.members) {
            bool entered = s == graph.initial();
            for (StateId p : preds.of(s)) {
                if (tag[p] != stamp) {
                    entered = true;
                    break;
                }
            }
            if (entered) node.inputs.push_back(s);
            for (const auto& t : graph.row(s))
                if (tag[t.target] != stamp) node.outputs.push_back(t.target);
        }
        std::sort(node.outputs.begin(), node.outputs.end());
        node.outputs.erase(std::unique(node.outputs.begin(), node.outputs.end()), node.outputs.end());

        // A node without inputs is unreachable from the initial state and
        // would reproduce itself, so it is not refined further.
        std::vector<std::vector<StateId>> comps;
        if (!node.inputs.empty()) {
            for (StateId s : node.inputs) is_input[s] = true;
            std::vector<StateId> rest;
            for (StateId s : node.members)
                if (!is_input[s]) rest.push_back(s);
            comps = finder.run(rest, [&](StateId v) { return tag[v] == stamp && !is_input[v]; });
            for (StateId s : node.inputs) is_input[s] = false;
        }

        h->depth_ = std::max(h->depth_, node.depth + 1);
        const NodeId id = node.id;
        h->nodes_.push_back(std::move(node));
        h->nodes_[id].children = enqueue(std::move(comps), id);
    }

    h->once_ = std::make_unique<std::once_flag[]>(h->nodes_.size());
    h->rows_.resize(h->nodes_.size());
    return h;
}

const SccNode& SccHierarchy::node(NodeId id) const {
    if (id >= nodes_.size()) throw UsageError("unknown hierarchy node " + std::to_string(id));
    return nodes_[id];
}

std::optional<NodeId> SccHierarchy::home(StateId s) const {
    if (s >= home_.size() || home_[s] == 0) return std::nullopt;
    return home_[s] - 1;
}

const std::vector<AbstractRow>& SccHierarchy::abstract_rows(NodeId id) const {
    const SccNode& n = node(id);
    std::call_once(once_[id], [&] { rows_[id] = abstract_transitions(n, *model_, solver_); });
    return rows_[id];
}

std::vector<NodeId> expandable_nodes(const SccHierarchy& hierarchy, const std::set<NodeId>& expanded) {
    std::vector<NodeId> out;
    for (const auto& node : hierarchy.nodes()) {
        if (expanded.contains(node.id)) continue;
        if (!node.parent || expanded.contains(*node.parent)) out.push_back(node.id);
    }
    return out;
}

} // namespace cexforge
