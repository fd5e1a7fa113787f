#include "cexforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cexforge {

namespace {

std::string short_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::string join_messages(const std::vector<Violation>& violations) {
    std::string out = "invalid model";
    for (std::size_t i = 0; i < violations.size() && i < 5; ++i) {
        out += i == 0 ? ": " : "; ";
        out += violations[i].message;
    }
    if (violations.size() > 5) out += "; ...";
    return out;
}

} // namespace

Dtmc::Dtmc(std::size_t num_states, StateId initial, std::vector<std::vector<Transition>> rows,
           Labels labels)
    : initial_(initial), labels_(std::move(labels)) {
    if (rows.size() != num_states)
        throw UsageError("row count " + std::to_string(rows.size()) + " does not match " +
                         std::to_string(num_states) + " states");
    offsets_.reserve(num_states + 1);
    offsets_.push_back(0);
    std::size_t total = 0;
    for (const auto& r : rows) total += r.size();
    transitions_.reserve(total);
    for (auto& r : rows) {
        std::stable_sort(r.begin(), r.end(),
                         [](const Transition& a, const Transition& b) { return a.target < b.target; });
        transitions_.insert(transitions_.end(), r.begin(), r.end());
        offsets_.push_back(transitions_.size());
        r = {};
    }
    for (auto& [name, states] : labels_) {
        std::sort(states.begin(), states.end());
        states.erase(std::unique(states.begin(), states.end()), states.end());
    }
}

std::span<const Transition> Dtmc::successors(StateId s) const {
    if (s >= num_states())
        throw UsageError("state " + std::to_string(s) + " out of range [0, " +
                         std::to_string(num_states()) + ")");
    return row(s);
}

const std::vector<StateId>& Dtmc::states_with_label(const std::string& name) const {
    auto it = labels_.find(name);
    if (it == labels_.end()) throw LabelNotFound(name);
    return it->second;
}

Dtmc Dtmc::with_labels(Labels labels) const {
    Dtmc copy = *this;
    copy.labels_ = std::move(labels);
    for (auto& [name, states] : copy.labels_) {
        std::sort(states.begin(), states.end());
        states.erase(std::unique(states.begin(), states.end()), states.end());
    }
    return copy;
}

Dtmc Dtmc::with_initial(StateId initial) const {
    Dtmc copy = *this;
    copy.initial_ = initial;
    return copy;
}

std::string to_string(Comparison c) { return c == Comparison::less_eq ? "<=" : "<"; }

std::string to_string(const ReachabilityProperty& prop) {
    return "P" + to_string(prop.comparison) + short_number(prop.threshold) + " [ F \"" +
           prop.target_label + "\" ]";
}

std::vector<Violation> validate_dtmc(const Dtmc& model) {
    std::vector<Violation> out;
    const std::size_t n = model.num_states();
    if (n == 0) {
        out.push_back({std::nullopt, "model has no states"});
        return out;
    }
    if (model.initial() >= n)
        out.push_back({std::nullopt, "initial state " + std::to_string(model.initial()) +
                                         " out of range"});
    for (StateId s = 0; s < n; ++s) {
        const auto r = model.row(s);
        double sum = 0.0;
        bool row_ok = true;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const auto& t = r[k];
            if (t.target >= n) {
                out.push_back({s, "row " + std::to_string(s) + " targets state " +
                                      std::to_string(t.target) + " out of range"});
                row_ok = false;
            }
            if (!(t.prob > 0.0) || t.prob > 1.0 || !std::isfinite(t.prob)) {
                out.push_back({s, "row " + std::to_string(s) + " has probability " +
                                      short_number(t.prob) + " outside (0,1]"});
                row_ok = false;
            }
            if (k > 0 && r[k - 1].target == t.target) {
                out.push_back({s, "row " + std::to_string(s) + " has duplicate transition to " +
                                      std::to_string(t.target)});
                row_ok = false;
            }
            sum += t.prob;
        }
        if (row_ok && std::abs(sum - 1.0) > row_sum_tolerance)
            out.push_back({s, "row " + std::to_string(s) + " sums to " + short_number(sum)});
    }
    for (const auto& [name, states] : model.labels()) {
        for (StateId s : states) {
            if (s >= n)
                out.push_back({s, "label " + name + " on state " + std::to_string(s) +
                                      " out of range"});
        }
    }
    return out;
}

InvalidModel::InvalidModel(std::vector<Violation> violations)
    : Error(join_messages(violations)), violations_(std::move(violations)) {}

void require_valid(const Dtmc& model) {
    auto violations = validate_dtmc(model);
    if (!violations.empty()) throw InvalidModel(std::move(violations));
}

std::span<const Transition> successors(const Dtmc& model, StateId s) {
    return model.successors(s);
}

const std::vector<StateId>& target_states(const Dtmc& model, const ReachabilityProperty& prop) {
    return model.states_with_label(prop.target_label);
}

std::vector<bool> state_mask(std::size_t num_states, std::span<const StateId> states) {
    std::vector<bool> mask(num_states, false);
    for (StateId s : states) {
        if (s < num_states) mask[s] = true;
    }
    return mask;
}

} // namespace cexforge
