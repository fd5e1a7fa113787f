#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cexforge/error.hpp"

namespace cexforge {

using StateId = std::uint32_t;

struct Transition {
    StateId target;
    double prob;

    friend bool operator==(const Transition&, const Transition&) = default;
};

// Tolerance on row sums for a matrix to count as stochastic.
inline constexpr double row_sum_tolerance = 1e-9;

// Sparse DTMC stored row-wise (CSR). Immutable once constructed.
//
// The constructor only sorts rows by target; it does not enforce the
// stochastic invariants, so that validate_dtmc() can report on arbitrary
// input. Everything downstream of the parser works on validated models.
class Dtmc {
public:
    using Labels = std::map<std::string, std::vector<StateId>>;

    Dtmc() = default;
    Dtmc(std::size_t num_states, StateId initial, std::vector<std::vector<Transition>> rows,
         Labels labels = {});

    std::size_t num_states() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_transitions() const noexcept { return transitions_.size(); }
    StateId initial() const noexcept { return initial_; }

    // Positive-probability transitions of `s`, sorted by target.
    std::span<const Transition> successors(StateId s) const;

    // Unchecked row access for hot loops; `s` must be in range.
    std::span<const Transition> row(StateId s) const noexcept {
        return {transitions_.data() + offsets_[s], transitions_.data() + offsets_[s + 1]};
    }

    const Labels& labels() const noexcept { return labels_; }
    bool has_label(const std::string& name) const { return labels_.contains(name); }
    // Sorted states carrying `name`; throws LabelNotFound.
    const std::vector<StateId>& states_with_label(const std::string& name) const;

    Dtmc with_labels(Labels labels) const;
    Dtmc with_initial(StateId initial) const;

    friend bool operator==(const Dtmc&, const Dtmc&) = default;

private:
    StateId initial_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> transitions_;
    Labels labels_;
};

enum class Comparison { less_eq, less };

// P<=λ(◇T) or P<λ(◇T); T is the set of states labelled `target_label`.
struct ReachabilityProperty {
    Comparison comparison = Comparison::less_eq;
    double threshold = 0.0;
    std::string target_label;

    // True iff `prob` breaks the bound.
    bool violated_by(double prob) const noexcept {
        return comparison == Comparison::less_eq ? prob > threshold : prob >= threshold;
    }

    friend bool operator==(const ReachabilityProperty&, const ReachabilityProperty&) = default;
};

std::string to_string(Comparison c);
std::string to_string(const ReachabilityProperty& prop);

struct Violation {
    std::optional<StateId> state;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_dtmc(const Dtmc& model);

// Thrown when a model fails validation where a valid one is required.
class InvalidModel : public Error {
public:
    explicit InvalidModel(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

// Throws InvalidModel unless validate_dtmc(model) is empty.
void require_valid(const Dtmc& model);

std::span<const Transition> successors(const Dtmc& model, StateId s);

// May be empty; throws LabelNotFound for unknown labels.
const std::vector<StateId>& target_states(const Dtmc& model, const ReachabilityProperty& prop);

// Membership bitmap over the model's states.
std::vector<bool> state_mask(std::size_t num_states, std::span<const StateId> states);

} // namespace cexforge
