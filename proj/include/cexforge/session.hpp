#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cexforge/ingest.hpp"
#include "cexforge/search.hpp"

namespace cexforge {

enum class SessionStatus { satisfied, searching, critical, budget_exhausted };

std::string to_string(SessionStatus s);

struct SessionOptions {
    SearchMethod method = SearchMethod::global;
    SearchOptions search;
};

// Semantic history entry. Replaying the history from the initial state
// reproduces the session.
struct SessionAction {
    enum class Kind { search, concretize, reset };
    Kind kind = Kind::search;
    std::vector<NodeId> nodes; // concretize only

    friend bool operator==(const SessionAction&, const SessionAction&) = default;
};

class RefinementSession;

// Picks the next node to concretize, or nothing to stop.
using NodeChooser = std::function<std::optional<NodeId>(const RefinementSession&)>;

enum class RefinePolicy {
    mass_greedy, // collapsed vertex with the largest reachability value in the subsystem
    expand_all,  // concretize everything, then search the concrete model afresh
};

// Hierarchical counterexample refinement over one model and property.
//
// Every action (search, concretize, reset) is validated, applied and then
// recorded; undo() drops the last record and replays the rest.
class RefinementSession {
public:
    static RefinementSession create(std::shared_ptr<const Dtmc> model, ReachabilityProperty prop,
                                    SessionOptions options = {});

    SessionStatus status() const noexcept { return status_; }
    const Dtmc& model() const noexcept { return *model_; }
    const std::shared_ptr<const Dtmc>& model_ptr() const noexcept { return model_; }
    const ReachabilityProperty& property() const noexcept { return prop_; }
    const SessionOptions& options() const noexcept { return options_; }
    double model_probability() const noexcept { return model_probability_; }

    // Null for satisfied sessions.
    const HierarchyPtr& hierarchy() const noexcept { return hierarchy_; }
    const View& view() const;
    const std::set<NodeId>& expanded() const noexcept { return expanded_; }
    const Subsystem& subsystem() const noexcept { return subsystem_; }
    double subsystem_probability() const;
    const std::vector<double>& trace() const noexcept { return trace_; }
    std::size_t iterations() const noexcept { return iterations_; }
    double wall_seconds() const noexcept { return wall_seconds_; }
    const std::vector<SessionAction>& history() const noexcept { return history_; }

    // Grows the current subsystem with the configured search. Requires
    // status searching.
    void run_search();
    // Expands the given nodes (each parent expanded already or in the same
    // call) and substitutes their member subgraphs into the subsystem.
    void concretize(const std::vector<NodeId>& nodes);
    void reset();
    void undo();

    void auto_refine(RefinePolicy policy = RefinePolicy::mass_greedy);
    void auto_refine(const NodeChooser& choose);

    CounterexampleReport report() const;

    // Versioned "cexforge-session/1" document carrying the model, property,
    // history and a snapshot of the resulting state.
    nlohmann::ordered_json export_json() const;
    std::string export_document() const;
    static RefinementSession import_document(const std::string& text);
    static RefinementSession import_json(const nlohmann::ordered_json& doc);

private:
    RefinementSession() = default;

    void require_active(const char* action) const;
    void restart();
    void apply(const SessionAction& action);
    void apply_search();
    void apply_concretize(const std::vector<NodeId>& nodes);
    void apply_reset();
    void refresh_status();
    std::vector<NodeId> validate_concretize(const std::vector<NodeId>& nodes) const;

    std::shared_ptr<const Dtmc> model_;
    ReachabilityProperty prop_;
    SessionOptions options_;
    double model_probability_ = 0.0;
    HierarchyPtr hierarchy_;
    std::shared_ptr<const View> initial_view_;
    std::shared_ptr<const View> view_;
    std::set<NodeId> expanded_;
    Subsystem subsystem_;
    std::vector<double> trace_;
    std::size_t iterations_ = 0;
    double wall_seconds_ = 0.0;
    SessionStatus status_ = SessionStatus::searching;
    std::vector<SessionAction> history_;
};

// Default chooser of RefinePolicy::mass_greedy.
std::optional<NodeId> choose_max_mass(const RefinementSession& session);

// Substitutes the member subgraph of every node of `old_view` that is
// expanded in `new_view` into `subsystem`.
Subsystem remap_subsystem(const View& old_view, const Subsystem& subsystem, const View& new_view);

} // namespace cexforge
