#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cexforge/ingest.hpp"
#include "cexforge/search.hpp"
#include "cexforge/session.hpp"

namespace testing {

using namespace cexforge;

inline Dtmc d1() {
    return Dtmc(4, 0, {{{1, 0.5}, {2, 0.5}}, {{0, 0.5}, {3, 0.5}}, {{2, 1.0}}, {{3, 1.0}}}, {{"goal", {3}}});
}

inline Dtmc d2() {
    return Dtmc(5, 0, {{{1, 0.6}, {2, 0.4}}, {{3, 0.5}, {4, 0.5}}, {{4, 1.0}}, {{3, 1.0}}, {{4, 1.0}}},
                {{"a", {3}}, {"b", {4}}});
}

inline const char* d1_tra = "STATES 4\nTRANSITIONS 6\n0 1 0.5\n0 2 0.5\n1 0 0.5\n1 3 0.5\n2 2 1\n3 3 1\n";
inline const char* d1_lab = "#DECLARATION\ngoal\n#END\n3 goal\n";
inline const char* d2_tra =
    "STATES 5\nTRANSITIONS 7\n0 1 0.6\n0 2 0.4\n1 3 0.5\n1 4 0.5\n2 4 1\n3 3 1\n4 4 1\n";
inline const char* d2_lab = "#DECLARATION\na b\n#END\n3 a\n4 b\n";

inline std::shared_ptr<const Dtmc> share(Dtmc m) { return std::make_shared<const Dtmc>(std::move(m)); }

inline ReachabilityProperty le(double lambda, std::string label) {
    return {Comparison::less_eq, lambda, std::move(label)};
}

inline ReachabilityProperty target_le(double lambda) { return le(lambda, std::string(random_target_label)); }

// Plain value iteration x <- P x with targets pinned to 1, from the target
// indicator. Shares no code with the library solvers.
inline std::vector<double> power_iteration(const Dtmc& m, const std::vector<StateId>& targets,
                                           std::size_t iterations = 100000) {
    const std::size_t n = m.num_states();
    std::vector<double> x(n, 0.0), y(n);
    std::vector<char> is_target(n, 0);
    for (StateId t : targets) is_target[t] = 1;
    for (StateId t : targets) x[t] = 1.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        double change = 0.0;
        for (StateId s = 0; s < n; ++s) {
            if (is_target[s]) {
                y[s] = 1.0;
                continue;
            }
            double acc = 0.0;
            for (const auto& t : m.row(s)) acc += t.prob * x[t.target];
            y[s] = acc;
            change = std::max(change, std::abs(acc - x[s]));
        }
        x.swap(y);
        if (change == 0.0) break;
    }
    return x;
}

inline double oracle_probability(const Dtmc& m, const std::string& label) {
    return power_iteration(m, m.states_with_label(label))[m.initial()];
}

// Probability of the sub-DTMC induced by a set of (state, state) edges on the
// concrete model, computed by the oracle above. Missing mass is lost.
inline double oracle_edge_subsystem(const Dtmc& m, const std::set<std::pair<StateId, StateId>>& edges,
                                    const std::string& label) {
    const std::size_t n = m.num_states();
    const auto& targets = m.states_with_label(label);
    std::vector<std::vector<Transition>> rows(n + 1);
    std::vector<char> is_target(n, 0);
    for (StateId t : targets) is_target[t] = 1;
    for (StateId s = 0; s < n; ++s) {
        if (is_target[s]) {
            rows[s] = {{s, 1.0}};
            continue;
        }
        double kept = 0.0;
        for (const auto& t : m.row(s))
            if (edges.contains({s, t.target})) {
                rows[s].push_back(t);
                kept += t.prob;
            }
        if (kept < 1.0) rows[s].push_back({static_cast<StateId>(n), 1.0 - kept});
    }
    rows[n] = {{static_cast<StateId>(n), 1.0}};
    Dtmc sub(n + 1, m.initial(), std::move(rows), {{label, targets}});
    return power_iteration(sub, targets)[m.initial()];
}

struct BruteWalk {
    std::vector<StateId> vertices;
    double cost;
};

// Every walk from the initial state that ends at its first target, with at
// most `max_edges` edges, ordered by (cost, vertex sequence). Edge costs are
// -ln(p) in fixed point with 40 fractional bits.
inline std::vector<BruteWalk> brute_force_walks(const Dtmc& g, const std::vector<StateId>& targets,
                                                std::size_t max_edges) {
    std::vector<char> is_target(g.num_states(), 0);
    for (StateId t : targets) is_target[t] = 1;
    std::vector<BruteWalk> out;
    std::vector<StateId> path{g.initial()};
    std::vector<std::int64_t> costs{0};
    auto rec = [&](auto&& self) -> void {
        const StateId v = path.back();
        if (is_target[v]) {
            out.push_back({path, static_cast<double>(costs.back()) / 0x1p40});
            return;
        }
        if (path.size() > max_edges) return;
        for (const auto& t : g.row(v)) {
            path.push_back(t.target);
            costs.push_back(costs.back() + std::llround(-std::log(t.prob) * 0x1p40));
            self(self);
            path.pop_back();
            costs.pop_back();
        }
    };
    rec(rec);
    std::sort(out.begin(), out.end(), [](const BruteWalk& a, const BruteWalk& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.vertices < b.vertices;
    });
    return out;
}

inline RandomModelSpec random_spec(std::uint64_t seed, std::size_t n, std::size_t degree = 3, double bias = 0.4,
                                   double targets = 0.15) {
    RandomModelSpec spec;
    spec.num_states = n;
    spec.out_degree = std::min(degree, n > 1 ? n - 1 : 1);
    spec.scc_bias = bias;
    spec.target_fraction = targets;
    spec.seed = seed;
    return spec;
}

// Random parent-first closed set of hierarchy nodes.
inline std::set<NodeId> random_admissible(const SccHierarchy& h, std::mt19937_64& rng, double p = 0.5) {
    std::set<NodeId> expanded;
    std::bernoulli_distribution coin(p);
    for (const auto& node : h.nodes()) // parents precede children
        if ((!node.parent || expanded.contains(*node.parent)) && coin(rng)) expanded.insert(node.id);
    return expanded;
}

inline std::set<NodeId> all_nodes(const SccHierarchy& h) {
    std::set<NodeId> out;
    for (const auto& node : h.nodes()) out.insert(node.id);
    return out;
}

// Concrete edges a view subsystem stands for, with abstract vertices
// replaced by nothing (only valid for fully concrete subsystems).
inline std::set<std::pair<StateId, StateId>> concrete_edges(const View& view, const Subsystem& sub) {
    std::set<std::pair<StateId, StateId>> out;
    for (const auto& [a, b] : sub.edges()) out.insert({view.vertex(a).state, view.vertex(b).state});
    return out;
}

} // namespace testing
