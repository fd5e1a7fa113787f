#include <algorithm>
#include <cmath>
#include <random>

#include "cexforge/ingest.hpp"

namespace cexforge {

namespace {

// Draws built directly on mt19937_64 output, whose sequence is fixed by the
// standard, so generated models do not depend on the library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::size_t index(std::size_t bound) { return static_cast<std::size_t>(engine_() % bound); }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

void check_spec(const RandomModelSpec& spec) {
    if (spec.num_states < 1) throw UsageError("num_states must be at least 1");
    if (spec.out_degree < 1) throw UsageError("out_degree must be at least 1");
    if (spec.num_states > 1 && spec.out_degree >= spec.num_states)
        throw UsageError("out_degree must be smaller than num_states");
    if (!(spec.scc_bias >= 0.0 && spec.scc_bias <= 1.0))
        throw UsageError("scc_bias must lie in [0,1]");
    if (!(spec.target_fraction > 0.0 && spec.target_fraction <= 1.0))
        throw UsageError("target_fraction must lie in (0,1]");
}

// Cluster width and forward reach: 2*ceil(log2 n), clamped to [4, 32].
std::size_t cluster_width(std::size_t n) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    return std::clamp<std::size_t>(2 * bits, 4, 32);
}

} // namespace

// Layout: state n-1 is absorbing; targets are absorbing and drawn from the
// interior first. States are cut into consecutive clusters of 2..w states.
// Every other state gets one forward edge (to a larger index within the next
// w states), so each state reaches an absorbing state, plus further edges
// that point back into its own cluster with probability scc_bias. Keeping
// cycles inside clusters gives many small, nested SCCs.
Dtmc generate_random_dtmc(const RandomModelSpec& spec) {
    check_spec(spec);
    const std::size_t n = spec.num_states;
    const std::string label(random_target_label);
    if (n == 1) {
        return Dtmc(1, 0, {{{0, 1.0}}}, {{label, {0}}});
    }

    Rng rng(spec.seed);
    const auto wanted = static_cast<std::size_t>(std::ceil(spec.target_fraction * static_cast<double>(n)));
    const std::size_t num_targets = std::clamp<std::size_t>(wanted, 1, n);

    std::vector<StateId> order;
    for (StateId s = 1; s + 1 < n; ++s) order.push_back(s);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    order.push_back(static_cast<StateId>(n - 1));
    order.push_back(0);
    std::vector<StateId> targets(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(num_targets));
    std::sort(targets.begin(), targets.end());
    const auto is_target = state_mask(n, targets);

    const std::size_t width = cluster_width(n);
    std::vector<StateId> cluster_start(n);
    for (std::size_t begin = 0; begin < n;) {
        const std::size_t len = 2 + rng.index(width - 1);
        const std::size_t end = std::min(n, begin + len);
        for (std::size_t s = begin; s < end; ++s) cluster_start[s] = static_cast<StateId>(begin);
        begin = end;
    }

    std::vector<std::vector<Transition>> rows(n);
    std::vector<StateId> succ;
    std::vector<double> weight;
    for (StateId s = 0; s < n; ++s) {
        if (is_target[s] || s + 1 == n) {
            rows[s] = {{s, 1.0}};
            continue;
        }
        const std::size_t forward_span = std::min(n - 1 - s, width);
        succ.clear();
        succ.push_back(static_cast<StateId>(s + 1 + rng.index(forward_span)));
        for (std::size_t attempt = 0; succ.size() < spec.out_degree && attempt < 4 * spec.out_degree;
             ++attempt) {
            StateId t;
            if (rng.unit() < spec.scc_bias)
                t = static_cast<StateId>(cluster_start[s] + rng.index(s + 1 - cluster_start[s]));
            else
                t = static_cast<StateId>(s + 1 + rng.index(forward_span));
            if (std::find(succ.begin(), succ.end(), t) == succ.end()) succ.push_back(t);
        }
        weight.clear();
        double total = 0.0;
        for (std::size_t i = 0; i < succ.size(); ++i) {
            weight.push_back(0.05 + 0.95 * rng.unit());
            total += weight.back();
        }
        for (std::size_t i = 0; i < succ.size(); ++i) rows[s].push_back({succ[i], weight[i] / total});
    }

    Dtmc model(n, 0, std::move(rows), {{label, std::move(targets)}});
    require_valid(model);
    return model;
}

} // namespace cexforge
