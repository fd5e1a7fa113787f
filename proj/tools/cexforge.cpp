// cexforge: model checking and hierarchical counterexamples for DTMCs.
//
// Exit status: 0 property holds / success, 1 error, 2 property violated,
// 3 no counterexample (property holds), 4 search budget exhausted.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cexforge/service.hpp"
#include "cexforge/session.hpp"

using namespace cexforge;

namespace {

enum Exit { exit_ok = 0, exit_error = 1, exit_violated = 2, exit_holds = 3, exit_budget = 4 };

struct PropertyFlags {
    std::string tra;
    std::string lab;
    std::string target;
    std::optional<double> le;
    std::optional<double> lt;
    bool one_based = false;
    bool json = false;
};

void add_property_flags(CLI::App* cmd, PropertyFlags& f) {
    cmd->add_option("--tra", f.tra, "transition file")->required();
    cmd->add_option("--lab", f.lab, "label file")->required();
    cmd->add_option("--target", f.target, "target label")->required();
    auto* le = cmd->add_option("--le", f.le, "bound for P<=lambda")->check(CLI::Range(0.0, 1.0));
    auto* lt = cmd->add_option("--lt", f.lt, "bound for P<lambda")->check(CLI::Range(0.0, 1.0));
    le->excludes(lt);
    cmd->add_flag("--one-based", f.one_based, "state indices start at 1");
    cmd->add_flag("--json", f.json, "structured report output");
}

ReachabilityProperty property_of(const PropertyFlags& f) {
    if (!f.le && !f.lt) throw UsageError("one of --le or --lt is required");
    if (f.le) return {Comparison::less_eq, *f.le, f.target};
    return {Comparison::less, *f.lt, f.target};
}

std::shared_ptr<const Dtmc> load(const PropertyFlags& f) {
    return std::make_shared<const Dtmc>(load_model(f.tra, f.lab, FormatOptions{f.one_based}));
}

std::string fmt6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("cannot write " + path);
}

int cmd_check(const PropertyFlags& f) {
    const auto model = load(f);
    const auto prop = property_of(f);
    const Verdict verdict = check_property(*model, prop);
    if (f.json) {
        nlohmann::ordered_json doc = {{"prob", verdict.probability},
                                      {"verdict", verdict.holds ? "holds" : "violated"}};
        std::cout << doc.dump() << '\n';
    } else {
        std::cout << "prob=" << fmt6(verdict.probability) << ' ' << (verdict.holds ? "HOLDS" : "VIOLATED") << '\n';
    }
    return verdict.holds ? exit_ok : exit_violated;
}

struct CexFlags {
    std::string method = "global";
    std::string refine = "none";
    std::size_t max_paths = SearchBudget{}.max_steps;
    std::optional<long> max_time_ms;
    std::string out;
    std::string subsystem_out;
    bool closure = false;
};

int cmd_counterexample(const PropertyFlags& f, const CexFlags& c) {
    const auto prop = property_of(f);
    SessionOptions options;
    options.method = c.method == "local" ? SearchMethod::local : SearchMethod::global;
    options.search.state_closure = c.closure;
    options.search.budget.max_steps = c.max_paths;
    if (c.max_time_ms) options.search.budget.max_time = std::chrono::milliseconds(*c.max_time_ms);

    auto session = RefinementSession::create(load(f), prop, options);
    spdlog::info("model probability {}", session.model_probability());
    if (session.status() == SessionStatus::satisfied) {
        std::cerr << "no counterexample: property holds (prob=" << fmt6(session.model_probability()) << ")\n";
        if (!c.out.empty())
            write_file(c.out, write_report(session.report(), f.json ? ReportFormat::json : ReportFormat::text));
        return exit_holds;
    }
    spdlog::info("hierarchy with {} nodes", session.hierarchy()->size());
    session.run_search();
    if (session.status() == SessionStatus::critical) {
        if (c.refine == "auto")
            session.auto_refine(RefinePolicy::mass_greedy);
        else if (c.refine == "full")
            session.auto_refine(RefinePolicy::expand_all);
    }

    const auto report = session.report();
    const auto format = f.json ? ReportFormat::json : ReportFormat::text;
    if (!c.out.empty()) write_file(c.out, write_report(report, format));
    if (!c.subsystem_out.empty()) write_file(c.subsystem_out, report.subsystem_tra);
    if (f.json && c.out.empty())
        std::cout << write_report(report, format);
    else
        std::cout << "states=" << report.subsystem_states << " transitions=" << report.subsystem_transitions
                  << " prob=" << fmt6(report.subsystem_probability)
                  << " concrete_states=" << report.subsystem_concrete_states << " status=" << report.status
                  << '\n';
    if (session.status() != SessionStatus::critical) {
        std::cerr << "search budget exhausted before the subsystem became critical\n";
        return exit_budget;
    }
    return exit_ok;
}

struct RandomFlags {
    RandomModelSpec spec;
    std::string out = "random";
};

int cmd_random(const RandomFlags& r) {
    const Dtmc model = generate_random_dtmc(r.spec);
    write_file(r.out + ".tra", write_tra(model));
    write_file(r.out + ".lab", write_lab(model));
    const auto sccs = decompose_sccs(model);
    const auto nontrivial = std::count(sccs.nontrivial.begin(), sccs.nontrivial.end(), true);
    std::cout << "states=" << model.num_states() << " transitions=" << model.num_transitions()
              << " nontrivial_sccs=" << nontrivial
              << " targets=" << model.states_with_label(std::string(random_target_label)).size() << '\n';
    return exit_ok;
}

struct ServeFlags {
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::string model_dir;
    long ttl = 1800;
};

int cmd_serve(const ServeFlags& s) {
    ServiceOptions options;
    options.model_dir = s.model_dir;
    options.session_ttl = std::chrono::seconds(s.ttl);
    Service service(options);
    serve(service, s.bind, s.port);
    return exit_ok;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("cexforge");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("CEXFORGE_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Counterexamples for probabilistic reachability in DTMCs"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML file with default flag values");

    PropertyFlags pf;
    CexFlags cf;
    RandomFlags rf;
    ServeFlags sf;

    auto* check = app.add_subcommand("check", "model check P<=lambda / P<lambda (F target)");
    add_property_flags(check, pf);

    auto* cex = app.add_subcommand("counterexample", "compute a critical subsystem");
    add_property_flags(cex, pf);
    cex->add_option("--method", cf.method)->check(CLI::IsMember({"global", "local"}));
    cex->add_option("--refine", cf.refine)->check(CLI::IsMember({"none", "auto", "full"}));
    cex->add_option("--max-paths", cf.max_paths, "search step budget");
    cex->add_option("--max-time", cf.max_time_ms, "search time budget in milliseconds");
    cex->add_option("--out", cf.out, "report file");
    cex->add_option("--subsystem-out", cf.subsystem_out, "subsystem .tra file");
    cex->add_flag("--closure", cf.closure, "close the subsystem under edges between its states");

    auto* rnd = app.add_subcommand("random", "generate a random DTMC");
    rnd->add_option("--states", rf.spec.num_states)->check(CLI::PositiveNumber);
    rnd->add_option("--out-degree", rf.spec.out_degree)->check(CLI::PositiveNumber);
    rnd->add_option("--scc-bias", rf.spec.scc_bias)->check(CLI::Range(0.0, 1.0));
    rnd->add_option("--target-fraction", rf.spec.target_fraction);
    rnd->add_option("--seed", rf.spec.seed);
    rnd->add_option("--out", rf.out, "output prefix for <prefix>.tra and <prefix>.lab");

    auto* srv = app.add_subcommand("serve", "run the local session API");
    srv->add_option("--bind", sf.bind);
    srv->add_option("--port", sf.port)->check(CLI::Range(0, 65535));
    srv->add_option("--model-dir", sf.model_dir)->check(CLI::ExistingDirectory);
    srv->add_option("--ttl", sf.ttl, "idle session lifetime in seconds")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return exit_error;
    }

    try {
        if (*check) return cmd_check(pf);
        if (*cex) return cmd_counterexample(pf, cf);
        if (*rnd) return cmd_random(rf);
        if (*srv) return cmd_serve(sf);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
    } catch (const InvalidModel& e) {
        std::cerr << "error: " << e.what() << '\n';
        for (const auto& v : e.violations()) std::cerr << "  " << v.message << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return exit_error;
}
