#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cexforge/model.hpp"

namespace cexforge {

struct SolverOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 1'000'000;
};

// Pr(s |= F T) for every state s.
struct ProbVector {
    std::vector<double> values;
    double residual = 0.0;
    std::size_t iterations = 0;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, ProbVector best)
        : Error(what), best_(std::move(best)) {}

    // Best iterate reached before giving up.
    const ProbVector& best() const noexcept { return best_; }

private:
    ProbVector best_;
};

struct QualitativeSets {
    std::vector<StateId> prob0; // cannot reach the targets
    std::vector<StateId> prob1; // reach the targets almost surely
};

QualitativeSets compute_prob01(const Dtmc& model, std::span<const StateId> targets);

// Gauss-Seidel over the states with probability strictly in (0,1), visiting
// the SCCs of that subgraph bottom-up so acyclic parts converge in one sweep.
// `initial` (optional, one entry per state) warm-starts the iteration; it is
// clamped to [0,1] and overridden on the prob0/prob1 sets.
ProbVector solve_reachability(const Dtmc& model, std::span<const StateId> targets,
                              const SolverOptions& options = {},
                              std::span<const double> initial = {});

struct Verdict {
    bool holds = true;
    double probability = 0.0;
};

Verdict check_property(const Dtmc& model, const ReachabilityProperty& prop,
                       const SolverOptions& options = {});

} // namespace cexforge
