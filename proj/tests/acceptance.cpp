// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/resource.h>
#include <sys/wait.h>

#include "support.hpp"

using namespace testing;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

int run_cli(const std::string& args, std::string* out = nullptr) {
    const std::string cmd = std::string(CEXFORGE_CLI) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return -1;
    std::string text;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) text.append(buf, n);
    const int status = pclose(pipe);
    if (out) *out = text;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

Dtmc scc_rich(std::uint64_t seed, std::size_t n) { return generate_random_dtmc(random_spec(seed, n, 3, 0.7, 0.1)); }

bool same_graph(const Dtmc& a, const Dtmc& b) {
    if (a.num_states() != b.num_states() || a.initial() != b.initial()) return false;
    for (StateId s = 0; s < a.num_states(); ++s) {
        const auto ra = a.row(s), rb = b.row(s);
        if (!std::equal(ra.begin(), ra.end(), rb.begin(), rb.end())) return false;
    }
    return true;
}

// Violated instance with threshold at `factor` of the model probability.
std::optional<std::pair<Dtmc, ReachabilityProperty>> violated_instance(std::uint64_t seed, std::size_t n,
                                                                        double factor) {
    Dtmc m = generate_random_dtmc(random_spec(seed, n, 3, 0.6));
    const double p = oracle_probability(m, std::string(random_target_label));
    if (p < 0.01) return std::nullopt;
    return std::make_pair(std::move(m), target_le(p * factor));
}

} // namespace

int main() {
    criterion("solver oracle equivalence", [] {
        const auto t0 = Clock::now();
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const Dtmc m = generate_random_dtmc(random_spec(seed, 2 + seed % 49, 3, 0.5));
            const auto& t = m.states_with_label(std::string(random_target_label));
            const auto x = solve_reachability(m, t).values;
            const auto y = power_iteration(m, t);
            for (StateId s = 0; s < m.num_states(); ++s) worst = std::max(worst, std::abs(x[s] - y[s]));
        }
        const double secs = seconds_since(t0);
        return Outcome{worst <= 1e-6 && secs < 10,
                       "100 models, max error " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
    });

    criterion("abstraction exactness", [] {
        const auto t0 = Clock::now();
        double worst = 0.0;
        std::size_t nodes = 0;
        std::mt19937_64 rng(11);
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const Dtmc m = scc_rich(seed, 20 + seed % 181);
            const auto& t = m.states_with_label(std::string(random_target_label));
            const double exact = solve_reachability(m, t).values[m.initial()];
            const auto h = SccHierarchy::build(share(m), t);
            nodes += h->size();
            for (int k = 0; k < 5; ++k) {
                const View v = build_view(h, random_admissible(*h, rng));
                std::vector<VertexId> vt;
                for (StateId s : t)
                    if (auto x = v.vertex_of_state(s)) vt.push_back(*x);
                const double p = solve_reachability(v.graph(), vt).values[v.initial()];
                worst = std::max(worst, std::abs(p - exact));
            }
        }
        const double secs = seconds_since(t0);
        return Outcome{worst <= 1e-8 && secs < 60, "200 models x 5 views, " + std::to_string(nodes) +
                                                       " nodes, max error " + fmt("%.3g", worst) + ", " +
                                                       fmt("%.2f", secs) + " s"};
    });

    criterion("full-expansion identity", [] {
        std::size_t models = 0, bad = 0;
        auto check = [&](const Dtmc& m, const std::vector<StateId>& t) {
            const auto h = SccHierarchy::build(share(m), t);
            ++models;
            if (!same_graph(build_view(h, all_nodes(*h)).graph(), m)) ++bad;
        };
        check(d1(), {3});
        check(d2(), {4});
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const Dtmc m = scc_rich(seed, 20 + seed % 181);
            check(m, m.states_with_label(std::string(random_target_label)));
        }
        return Outcome{bad == 0, std::to_string(models) + " models, " + std::to_string(bad) + " mismatches"};
    });

    criterion("k-path ordering", [] {
        std::size_t models = 0, walks = 0, bad = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const Dtmc m = generate_random_dtmc(random_spec(seed, 2 + seed % 7, 3, 0.5, 0.2));
            const auto& t = m.states_with_label(std::string(random_target_label));
            const auto brute = brute_force_walks(m, t, 12);
            PathEnumerator paths(m, m.initial(), t);
            ++models;
            for (const auto& expected : brute) {
                auto w = paths.next();
                if (!w) {
                    ++bad;
                    break;
                }
                if (w->vertices.size() > 13) break; // beyond the brute-force horizon
                ++walks;
                if (w->vertices != expected.vertices || w->cost != expected.cost) {
                    ++bad;
                    break;
                }
            }
        }
        return Outcome{bad == 0, std::to_string(models) + " models (n <= 8), " + std::to_string(walks) +
                                     " walks compared, " + std::to_string(bad) + " mismatches"};
    });

    criterion("criticality contract", [] {
        std::size_t instances = 0, bad = 0;
        for (std::uint64_t seed = 0; instances < 100 && seed < 1000; ++seed) {
            auto inst = violated_instance(seed, 20 + seed % 100, 0.7);
            if (!inst) continue;
            auto& [m, prop] = *inst;
            const auto h = SccHierarchy::build(share(m), target_states(m, prop));
            const View view = build_view(h);
            for (auto method : {SearchMethod::global, SearchMethod::local}) {
                auto r = run_search(method, view, prop);
                bool ok = r.outcome == SearchOutcome::critical && is_critical(view, r.subsystem, prop);
                for (std::size_t i = 1; i < r.trace.size(); ++i) ok = ok && r.trace[i] >= r.trace[i - 1];
                if (r.trace.size() >= 2) ok = ok && !prop.violated_by(r.trace[r.trace.size() - 2]);
                if (!ok) ++bad;
            }
            ++instances;
        }
        return Outcome{instances == 100 && bad == 0,
                       std::to_string(instances) + " instances x 2 methods, " + std::to_string(bad) + " failures"};
    });

    criterion("end-to-end soundness", [] {
        std::size_t instances = 0, bad = 0;
        double worst = 0.0;
        for (std::uint64_t seed = 0; instances < 50 && seed < 500; ++seed) {
            auto inst = violated_instance(seed, 30 + seed % 70, 0.6);
            if (!inst) continue;
            auto& [m, prop] = *inst;
            auto s = RefinementSession::create(share(m), prop);
            s.run_search();
            s.auto_refine(instances % 2 ? RefinePolicy::expand_all : RefinePolicy::mass_greedy);
            bool ok = s.status() == SessionStatus::critical;
            for (VertexId v : s.subsystem().vertices()) ok = ok && s.view().vertex(v).kind == VertexKind::concrete;
            const double oracle =
                oracle_edge_subsystem(m, concrete_edges(s.view(), s.subsystem()), prop.target_label);
            worst = std::max(worst, std::abs(oracle - s.subsystem_probability()));
            ok = ok && prop.violated_by(oracle);
            if (!ok) ++bad;
            ++instances;
        }
        return Outcome{instances == 50 && bad == 0, std::to_string(instances) + " instances, " +
                                                        std::to_string(bad) + " unsound, max oracle gap " +
                                                        fmt("%.3g", worst)};
    });

    criterion("canonical numbers", [] {
        const double p1 = check_property(d1(), le(0.25, "goal")).probability;
        const auto h = SccHierarchy::build(share(d1()), std::vector<StateId>{3});
        double edge = -1.0;
        for (const auto& t : h->abstract_rows(0).at(0).exits)
            if (t.target == 3) edge = t.prob;
        const auto h2 = SccHierarchy::build(share(d2()), std::vector<StateId>{4});
        const View v2 = build_view(h2);
        auto r = global_search(v2, le(0.35, "b"));
        const bool ok = std::abs(p1 - 1.0 / 3) <= 1e-8 && std::abs(edge - 1.0 / 3) <= 1e-9 &&
                        r.outcome == SearchOutcome::critical && r.subsystem.vertices().size() == 3 &&
                        std::abs(r.trace.back() - 0.4) <= 1e-12;
        return Outcome{ok, "D1 prob " + fmt("%.12g", p1) + ", D1 abstract edge " + fmt("%.12g", edge) +
                               ", D2 subsystem " + std::to_string(r.subsystem.vertices().size()) + " states prob " +
                               fmt("%.12g", r.trace.back())};
    });

    criterion("desk-scale performance", [] {
        const auto dir = std::filesystem::temp_directory_path() / ("cexforge_accept_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
        const Dtmc m = generate_random_dtmc(random_spec(7, 50'000, 5, 0.4));
        spit(dir / "big.tra", write_tra(m));
        spit(dir / "big.lab", write_lab(m));
        const double p = check_property(m, target_le(1.0)).probability;
        const std::string args = "counterexample --tra " + (dir / "big.tra").string() + " --lab " +
                                 (dir / "big.lab").string() + " --target target --le " + fmt("%.17g", p * 0.5);
        const auto t0 = Clock::now();
        std::string out;
        const int code = run_cli(args, &out);
        const double secs = seconds_since(t0);
        rusage usage{};
        getrusage(RUSAGE_CHILDREN, &usage);
        const double mb = static_cast<double>(usage.ru_maxrss) / 1024.0;
        std::filesystem::remove_all(dir);
        if (!out.empty() && out.back() == '\n') out.pop_back();
        return Outcome{code == 0 && secs < 60 && mb < 2048,
                       std::to_string(m.num_states()) + " states, " + std::to_string(m.num_transitions()) +
                           " transitions, exit " + std::to_string(code) + ", " + fmt("%.2f", secs) + " s, peak " +
                           fmt("%.0f", mb) + " MB (" + out + ")"};
    });

    criterion("format and round-trip", [] {
        std::vector<std::string> problems;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const Dtmc m = generate_random_dtmc(random_spec(seed, 5 + seed * 7, 4, 0.5));
            const std::string tra = write_tra(m), lab = write_lab(m);
            const Dtmc back = parse_lab(lab, parse_tra(tra));
            if (write_tra(back) != tra || write_lab(back) != lab || !same_graph(back, m))
                problems.push_back("tra/lab seed " + std::to_string(seed));
        }
        if (write_tra(parse_tra(d2_tra)) != d2_tra) problems.push_back("D2 tra text");
        std::size_t exports = 0;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            auto inst = violated_instance(seed, 40 + seed, 0.6);
            if (!inst) continue;
            auto s = RefinementSession::create(share(inst->first), inst->second);
            s.run_search();
            if (seed % 2) s.auto_refine();
            const std::string doc = s.export_document();
            if (RefinementSession::import_document(doc).export_document() != doc)
                problems.push_back("session export seed " + std::to_string(seed));
            ++exports;
        }

        const auto dir = std::filesystem::temp_directory_path() / ("cexforge_matrix_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
        spit(dir / "d1.tra", d1_tra);
        spit(dir / "d1.lab", d1_lab);
        spit(dir / "d2.tra", d2_tra);
        spit(dir / "d2.lab", d2_lab);
        spit(dir / "bad.tra", "STATES 2\nTRANSITIONS 1\n0 1 0.5\n");
        const std::string d1 = "--tra " + (dir / "d1.tra").string() + " --lab " + (dir / "d1.lab").string();
        const std::string d2 = "--tra " + (dir / "d2.tra").string() + " --lab " + (dir / "d2.lab").string();
        const std::vector<std::pair<std::string, int>> matrix = {
            {"check " + d1 + " --target goal --le 0.5", 0},
            {"check " + d1 + " --target goal --le 0.25", 2},
            {"check " + d2 + " --target b --lt 0.7", 2},
            {"check " + d2 + " --target b --le 0.7", 0},
            {"counterexample " + d2 + " --target b --le 0.35", 0},
            {"counterexample " + d1 + " --target goal --le 0.25 --refine auto --method local", 0},
            {"counterexample " + d1 + " --target goal --le 0.5", 3},
            {"counterexample " + d1 + " --target goal --le 0.25 --max-paths 0", 4},
            {"check --tra " + (dir / "missing.tra").string() + " --lab x.lab --target goal --le 0.5", 1},
            {"check --tra " + (dir / "bad.tra").string() + " --lab " + (dir / "d1.lab").string() +
                 " --target goal --le 0.5",
             1},
            {"check " + d1 + " --target nolabel --le 0.5", 1},
            {"counterexample " + d1 + " --target goal --le 0.25 --method bogus", 1},
        };
        std::size_t exit_ok = 0;
        for (const auto& [args, expected] : matrix) {
            const int code = run_cli(args);
            if (code == expected)
                ++exit_ok;
            else
                problems.push_back("exit " + std::to_string(code) + " != " + std::to_string(expected) + " for '" +
                                   args.substr(0, args.find(' ')) + "'");
        }
        std::filesystem::remove_all(dir);
        std::string detail = "51 tra/lab pairs, " + std::to_string(exports) + " session exports, " +
                             std::to_string(exit_ok) + "/" + std::to_string(matrix.size()) + " exit codes";
        for (const auto& p : problems) detail += "; " + p;
        return Outcome{problems.empty(), detail};
    });

    std::cout << (failures ? "acceptance: FAILED (" + std::to_string(failures) + ")" : std::string("acceptance: OK"))
              << std::endl;
    return failures ? 1 : 0;
}
