#include <sstream>

#include "cexforge/ingest.hpp"

namespace cexforge {

namespace {

std::string comparison_keyword(Comparison c) { return c == Comparison::less_eq ? "le" : "lt"; }

std::string render_scalar(const nlohmann::ordered_json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_float()) return format_probability(value.get<double>());
    if (value.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i) out += ',';
            out += render_scalar(value[i]);
        }
        return out;
    }
    return value.dump();
}

void render_text(std::ostream& out, const nlohmann::ordered_json& doc, const std::string& prefix) {
    for (const auto& [key, value] : doc.items()) {
        if (key == "subsystem_tra") continue;
        if (value.is_object())
            render_text(out, value, prefix + key + ".");
        else
            out << prefix << key << '=' << render_scalar(value) << '\n';
    }
}

} // namespace

nlohmann::ordered_json report_to_json(const CounterexampleReport& r, const ReportOptions& options) {
    nlohmann::ordered_json doc;
    doc["schema"] = "cexforge-report/1";
    doc["property"] = {{"comparison", comparison_keyword(r.property.comparison)},
                       {"threshold", r.property.threshold},
                       {"target", r.property.target_label}};
    doc["verdict"] = r.holds ? "holds" : "violated";
    doc["model_prob"] = r.model_probability;
    doc["model_states"] = r.model_states;
    doc["model_transitions"] = r.model_transitions;
    if (r.holds) {
        doc["message"] = "property holds, no counterexample";
        return doc;
    }
    doc["status"] = r.status;
    doc["method"] = r.method;
    doc["view_vertices"] = r.view_vertices;
    doc["view_edges"] = r.view_edges;
    doc["expanded_nodes"] = r.expanded_nodes;
    doc["subsystem_states"] = r.subsystem_states;
    doc["subsystem_concrete_states"] = r.subsystem_concrete_states;
    doc["subsystem_transitions"] = r.subsystem_transitions;
    doc["subsystem_prob"] = r.subsystem_probability;
    doc["trace"] = r.trace;
    doc["iterations"] = r.iterations;
    doc["wall_time"] = options.fixed_timestamp ? 0.0 : r.wall_time_seconds;
    doc["subsystem_tra"] = r.subsystem_tra;
    return doc;
}

std::string write_report(const CounterexampleReport& report, ReportFormat format,
                         const ReportOptions& options) {
    const auto doc = report_to_json(report, options);
    if (format == ReportFormat::json) return doc.dump(2) + "\n";
    std::ostringstream out;
    render_text(out, doc, "");
    if (doc.contains("subsystem_tra")) out << "# subsystem\n" << report.subsystem_tra;
    return out.str();
}

} // namespace cexforge
