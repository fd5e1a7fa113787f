#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cexforge/model.hpp"

namespace cexforge {

// ---------------------------------------------------------------------------
// Explicit-state files
//
//   .tra   STATES <n>
//          TRANSITIONS <m>
//          <src> <dst> <prob>      (m lines)
//
//   .lab   #DECLARATION
//          <label> [<label> ...]
//          #END
//          <state> <label> [<label> ...]
//
// Indices are 0-based unless `one_based` is set (the MRMC dialect). '#'
// starts a comment in .tra files. Probabilities may be decimal, scientific
// or a rational "p/q". A bare "<n> <m>" header (PRISM export) is accepted in
// place of the two keyword lines.
// ---------------------------------------------------------------------------

struct FormatOptions {
    bool one_based = false;
};

// Parses and validates; the result has initial state 0 and no labels.
Dtmc parse_tra(std::istream& in, const FormatOptions& options = {});
Dtmc parse_tra(std::string_view text, const FormatOptions& options = {});

// Labels replace whatever `model` carried.
Dtmc parse_lab(std::istream& in, const Dtmc& model, const FormatOptions& options = {});
Dtmc parse_lab(std::string_view text, const Dtmc& model, const FormatOptions& options = {});

void write_tra(std::ostream& out, const Dtmc& model, const FormatOptions& options = {});
std::string write_tra(const Dtmc& model, const FormatOptions& options = {});
void write_lab(std::ostream& out, const Dtmc& model, const FormatOptions& options = {});
std::string write_lab(const Dtmc& model, const FormatOptions& options = {});

Dtmc load_model(const std::string& tra_path, const std::string& lab_path,
                const FormatOptions& options = {});

// Shortest decimal string that parses back to exactly `value`.
std::string format_probability(double value);
double parse_probability(std::string_view token);

// ---------------------------------------------------------------------------
// Random benchmark models
// ---------------------------------------------------------------------------

struct RandomModelSpec {
    std::size_t num_states = 10;
    std::size_t out_degree = 2;
    double scc_bias = 0.3;
    double target_fraction = 0.1;
    std::uint64_t seed = 0;
};

// Label under which generated target states are published.
inline constexpr std::string_view random_target_label = "target";

Dtmc generate_random_dtmc(const RandomModelSpec& spec);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CounterexampleReport {
    ReachabilityProperty property;
    bool holds = false;
    double model_probability = 0.0;
    std::size_t model_states = 0;
    std::size_t model_transitions = 0;
    std::string status;
    std::string method;
    std::size_t view_vertices = 0;
    std::size_t view_edges = 0;
    std::vector<std::uint32_t> expanded_nodes;
    std::size_t subsystem_states = 0;          // view vertices in the subsystem
    std::size_t subsystem_concrete_states = 0; // abstract vertices counted by members
    std::size_t subsystem_transitions = 0;
    double subsystem_probability = 0.0;
    std::vector<double> trace;
    std::size_t iterations = 0;
    double wall_time_seconds = 0.0;
    std::string subsystem_tra;
};

struct ReportOptions {
    // Emit wall_time=0 so reports are byte-identical across runs.
    bool fixed_timestamp = false;
};

nlohmann::ordered_json report_to_json(const CounterexampleReport& report,
                                      const ReportOptions& options = {});

enum class ReportFormat { text, json };

std::string write_report(const CounterexampleReport& report, ReportFormat format = ReportFormat::text,
                         const ReportOptions& options = {});

} // namespace cexforge
