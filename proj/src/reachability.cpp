#include "cexforge/reachability.hpp"

#include <algorithm>
#include <cmath>

#include "cexforge/detail/tarjan.hpp"

namespace cexforge {

namespace {

struct Classification {
    // 0 = prob0, 1 = prob1, 2 = unknown
    std::vector<std::uint8_t> kind;
};

constexpr std::uint8_t kProb0 = 0;
constexpr std::uint8_t kProb1 = 1;
constexpr std::uint8_t kUnknown = 2;

Classification classify(const Dtmc& model, std::span<const StateId> targets) {
    const std::size_t n = model.num_states();
    const detail::Predecessors preds(model);
    const auto is_target = state_mask(n, targets);

    // Backward reachability from the targets.
    std::vector<bool> reaches(n, false);
    std::vector<StateId> queue;
    for (StateId t : targets) {
        if (t >= n) throw UsageError("target state " + std::to_string(t) + " out of range");
        if (!reaches[t]) {
            reaches[t] = true;
            queue.push_back(t);
        }
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        for (StateId p : preds.of(queue[head])) {
            if (!reaches[p]) {
                reaches[p] = true;
                queue.push_back(p);
            }
        }
    }

    // States that can reach a prob0 state without passing a target.
    std::vector<bool> may_fail(n, false);
    queue.clear();
    for (StateId s = 0; s < n; ++s) {
        if (!reaches[s]) {
            may_fail[s] = true;
            queue.push_back(s);
        }
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        for (StateId p : preds.of(queue[head])) {
            if (!may_fail[p] && !is_target[p]) {
                may_fail[p] = true;
                queue.push_back(p);
            }
        }
    }

    Classification c;
    c.kind.resize(n);
    for (StateId s = 0; s < n; ++s) {
        if (!reaches[s])
            c.kind[s] = kProb0;
        else if (!may_fail[s])
            c.kind[s] = kProb1;
        else
            c.kind[s] = kUnknown;
    }
    return c;
}

} // namespace

QualitativeSets compute_prob01(const Dtmc& model, std::span<const StateId> targets) {
    if (targets.empty()) throw UsageError("empty target set");
    const auto c = classify(model, targets);
    QualitativeSets out;
    for (StateId s = 0; s < c.kind.size(); ++s) {
        if (c.kind[s] == kProb0) out.prob0.push_back(s);
        if (c.kind[s] == kProb1) out.prob1.push_back(s);
    }
    return out;
}

ProbVector solve_reachability(const Dtmc& model, std::span<const StateId> targets,
                              const SolverOptions& options, std::span<const double> initial) {
    if (targets.empty()) throw UsageError("empty target set");
    if (!(options.tolerance > 0.0)) throw UsageError("solver tolerance must be positive");
    const std::size_t n = model.num_states();
    if (!initial.empty() && initial.size() != n)
        throw UsageError("warm-start vector has wrong size");

    const auto c = classify(model, targets);
    ProbVector result;
    result.values.assign(n, 0.0);
    std::vector<StateId> unknown;
    for (StateId s = 0; s < n; ++s) {
        if (c.kind[s] == kProb1) {
            result.values[s] = 1.0;
        } else if (c.kind[s] == kUnknown) {
            unknown.push_back(s);
            if (!initial.empty()) result.values[s] = std::clamp(initial[s], 0.0, 1.0);
        }
    }
    if (unknown.empty()) return result;

    detail::SccFinder finder(model);
    const auto blocks =
        finder.run(unknown, [&](StateId v) { return c.kind[v] == kUnknown; });

    auto& x = result.values;
    for (const auto& block : blocks) {
        const bool single = block.size() == 1;
        if (single) {
            // Closed form for a lone state: x = (sum_out) / (1 - p_self).
            const StateId s = block.front();
            double self = 0.0, rest = 0.0;
            for (const auto& t : model.row(s)) {
                if (t.target == s)
                    self += t.prob;
                else
                    rest += t.prob * x[t.target];
            }
            x[s] = self < 1.0 ? std::min(1.0, rest / (1.0 - self)) : 0.0;
            ++result.iterations;
            continue;
        }
        std::size_t sweeps = 0;
        double residual = 0.0;
        do {
            if (sweeps == options.max_iterations) {
                result.residual = residual;
                throw SolverError("Gauss-Seidel did not converge within " +
                                      std::to_string(options.max_iterations) +
                                      " iterations (residual " + std::to_string(residual) + ")",
                                  std::move(result));
            }
            residual = 0.0;
            for (StateId s : block) {
                double acc = 0.0;
                for (const auto& t : model.row(s)) acc += t.prob * x[t.target];
                acc = std::min(acc, 1.0);
                residual = std::max(residual, std::abs(acc - x[s]));
                x[s] = acc;
            }
            ++sweeps;
        } while (residual > options.tolerance);
        result.iterations += sweeps;
        result.residual = std::max(result.residual, residual);
    }
    return result;
}

Verdict check_property(const Dtmc& model, const ReachabilityProperty& prop,
                       const SolverOptions& options) {
    const auto& targets = target_states(model, prop);
    Verdict v;
    if (!targets.empty()) {
        const auto solved = solve_reachability(model, targets, options);
        v.probability = solved.values[model.initial()];
    }
    v.holds = !prop.violated_by(v.probability);
    return v;
}

} // namespace cexforge
