#include "cexforge/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace cexforge {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::optional<std::uint64_t> parse_uint(std::string_view token) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::optional<double> parse_double(std::string_view token) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

StateId parse_index(std::string_view token, std::size_t line, std::size_t num_states,
                    const FormatOptions& options) {
    auto v = parse_uint(token);
    if (!v) throw ParseError(line, "expected a state index, got '" + std::string(token) + "'");
    std::uint64_t idx = *v;
    if (options.one_based) {
        if (idx == 0) throw ParseError(line, "state index 0 in a 1-based file");
        --idx;
    }
    if (idx >= num_states)
        throw ParseError(line, "state index " + std::string(token) + " out of range (" +
                                   std::to_string(num_states) + " states)");
    return static_cast<StateId>(idx);
}

StateId output_index(StateId s, const FormatOptions& options) {
    return options.one_based ? s + 1 : s;
}

} // namespace

std::string format_probability(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

double parse_probability(std::string_view token) {
    const auto slash = token.find('/');
    if (slash != std::string_view::npos) {
        auto num = parse_double(token.substr(0, slash));
        auto den = parse_double(token.substr(slash + 1));
        if (!num || !den || *den == 0.0)
            throw Error("malformed rational probability '" + std::string(token) + "'");
        return *num / *den;
    }
    auto v = parse_double(token);
    if (!v) throw Error("malformed probability '" + std::string(token) + "'");
    return *v;
}

Dtmc parse_tra(std::istream& in, const FormatOptions& options) {
    std::optional<std::uint64_t> num_states, num_transitions;
    std::vector<std::vector<Transition>> rows;
    std::uint64_t seen = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto tokens = split(view);

        if (!num_states || !num_transitions) {
            if (tokens.size() == 2 && iequals(tokens[0], "STATES") && !num_states) {
                num_states = parse_uint(tokens[1]);
                if (!num_states) throw ParseError(line_no, "malformed STATES header");
            } else if (tokens.size() == 2 && iequals(tokens[0], "TRANSITIONS") && num_states) {
                num_transitions = parse_uint(tokens[1]);
                if (!num_transitions) throw ParseError(line_no, "malformed TRANSITIONS header");
            } else if (tokens.size() == 2 && !num_states && parse_uint(tokens[0]) &&
                       parse_uint(tokens[1])) {
                num_states = parse_uint(tokens[0]);
                num_transitions = parse_uint(tokens[1]);
            } else {
                throw ParseError(line_no, num_states ? "expected 'TRANSITIONS <m>'"
                                                     : "expected 'STATES <n>'");
            }
            if (num_states && num_transitions) {
                if (*num_states == 0) throw ParseError(line_no, "model must have at least one state");
                if (*num_states > std::numeric_limits<StateId>::max())
                    throw ParseError(line_no, "too many states");
                rows.resize(*num_states);
            }
            continue;
        }

        if (tokens.size() != 3)
            throw ParseError(line_no, "expected '<src> <dst> <prob>', got " +
                                          std::to_string(tokens.size()) + " fields");
        if (seen == *num_transitions)
            throw ParseError(line_no, "more transitions than the declared " +
                                          std::to_string(*num_transitions));
        const StateId src = parse_index(tokens[0], line_no, *num_states, options);
        const StateId dst = parse_index(tokens[1], line_no, *num_states, options);
        double prob;
        try {
            prob = parse_probability(tokens[2]);
        } catch (const Error& e) {
            throw ParseError(line_no, e.what());
        }
        rows[src].push_back({dst, prob});
        ++seen;
    }
    if (!num_states || !num_transitions) throw ParseError(line_no, "missing header");
    if (seen != *num_transitions)
        throw ParseError(line_no, "declared " + std::to_string(*num_transitions) +
                                      " transitions but found " + std::to_string(seen));
    Dtmc model(static_cast<std::size_t>(*num_states), 0, std::move(rows));
    require_valid(model);
    return model;
}

Dtmc parse_tra(std::string_view text, const FormatOptions& options) {
    std::istringstream in{std::string(text)};
    return parse_tra(in, options);
}

Dtmc parse_lab(std::istream& in, const Dtmc& model, const FormatOptions& options) {
    enum class Section { start, declaration, body } section = Section::start;
    Dtmc::Labels labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        switch (section) {
        case Section::start:
            if (view != "#DECLARATION") throw ParseError(line_no, "expected '#DECLARATION'");
            section = Section::declaration;
            break;
        case Section::declaration:
            if (view == "#END") {
                section = Section::body;
                break;
            }
            for (auto name : split(view)) labels.emplace(std::string(name), std::vector<StateId>{});
            break;
        case Section::body: {
            if (view.front() == '#') continue;
            const auto tokens = split(view);
            const StateId s = parse_index(tokens[0], line_no, model.num_states(), options);
            if (tokens.size() < 2) throw ParseError(line_no, "state without labels");
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                auto it = labels.find(std::string(tokens[i]));
                if (it == labels.end())
                    throw ParseError(line_no, "undeclared label '" + std::string(tokens[i]) + "'");
                it->second.push_back(s);
            }
            break;
        }
        }
    }
    if (section != Section::body) throw ParseError(line_no, "missing '#END'");
    return model.with_labels(std::move(labels));
}

Dtmc parse_lab(std::string_view text, const Dtmc& model, const FormatOptions& options) {
    std::istringstream in{std::string(text)};
    return parse_lab(in, model, options);
}

void write_tra(std::ostream& out, const Dtmc& model, const FormatOptions& options) {
    out << "STATES " << model.num_states() << '\n';
    out << "TRANSITIONS " << model.num_transitions() << '\n';
    for (StateId s = 0; s < model.num_states(); ++s) {
        for (const auto& t : model.row(s)) {
            out << output_index(s, options) << ' ' << output_index(t.target, options) << ' '
                << format_probability(t.prob) << '\n';
        }
    }
}

std::string write_tra(const Dtmc& model, const FormatOptions& options) {
    std::ostringstream out;
    write_tra(out, model, options);
    return out.str();
}

void write_lab(std::ostream& out, const Dtmc& model, const FormatOptions& options) {
    out << "#DECLARATION\n";
    bool first = true;
    for (const auto& [name, states] : model.labels()) {
        out << (first ? "" : " ") << name;
        first = false;
    }
    if (!model.labels().empty()) out << '\n';
    out << "#END\n";

    std::vector<std::vector<const std::string*>> per_state(model.num_states());
    for (const auto& [name, states] : model.labels())
        for (StateId s : states) per_state[s].push_back(&name);
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (per_state[s].empty()) continue;
        out << output_index(s, options);
        for (const auto* name : per_state[s]) out << ' ' << *name;
        out << '\n';
    }
}

std::string write_lab(const Dtmc& model, const FormatOptions& options) {
    std::ostringstream out;
    write_lab(out, model, options);
    return out.str();
}

Dtmc load_model(const std::string& tra_path, const std::string& lab_path,
                const FormatOptions& options) {
    std::ifstream tra(tra_path);
    if (!tra) throw Error("cannot open " + tra_path);
    Dtmc model = parse_tra(tra, options);
    if (lab_path.empty()) return model;
    std::ifstream lab(lab_path);
    if (!lab) throw Error("cannot open " + lab_path);
    return parse_lab(lab, model, options);
}

} // namespace cexforge
