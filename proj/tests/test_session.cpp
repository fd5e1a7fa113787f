#include <doctest.h>

#include "support.hpp"

using namespace testing;

namespace {

RefinementSession d1_session(double lambda = 0.25, SessionOptions options = {}) {
    return RefinementSession::create(share(d1()), le(lambda, "goal"), options);
}

RefinementSession random_session(std::uint64_t seed, std::size_t n, double factor, SessionOptions options = {}) {
    const Dtmc m = generate_random_dtmc(random_spec(seed, n, 3, 0.6));
    const double p = oracle_probability(m, std::string(random_target_label));
    return RefinementSession::create(share(m), target_le(p * factor), options);
}

} // namespace

TEST_SUITE("session") {

TEST_CASE("satisfied property") {
    auto s = d1_session(0.5);
    CHECK(s.status() == SessionStatus::satisfied);
    CHECK(s.model_probability() == doctest::Approx(1.0 / 3).epsilon(1e-9));
    CHECK_FALSE(s.hierarchy());
    CHECK_THROWS_AS(s.view(), UsageError);
    CHECK_THROWS_AS(s.run_search(), UsageError);
    CHECK_THROWS_AS(s.concretize({0}), UsageError);
    const auto r = s.report();
    CHECK(r.holds);
    CHECK(r.subsystem_states == 0);
}

TEST_CASE("D1 walkthrough") {
    auto s = d1_session();
    CHECK(s.status() == SessionStatus::searching);
    CHECK(s.view().num_vertices() == 3);
    CHECK(s.hierarchy()->size() == 1);
    s.run_search();
    CHECK(s.status() == SessionStatus::critical);
    CHECK(s.subsystem().vertices() == std::set<VertexId>{0, 2});
    CHECK(s.subsystem_probability() == doctest::Approx(1.0 / 3).epsilon(1e-9));

    s.concretize({0});
    CHECK(s.expanded() == std::set<NodeId>{0});
    CHECK(s.view().num_vertices() == 4);
    CHECK(s.subsystem().vertices() == std::set<VertexId>{0, 1, 3});
    CHECK(s.status() == SessionStatus::critical);
    CHECK(s.subsystem_probability() == doctest::Approx(1.0 / 3).epsilon(1e-9));
    CHECK(s.history().size() == 2);

    s.undo();
    CHECK(s.expanded().empty());
    CHECK(s.status() == SessionStatus::critical);
    CHECK(s.subsystem().vertices() == std::set<VertexId>{0, 2});
    s.undo();
    CHECK(s.status() == SessionStatus::searching);
    CHECK(s.subsystem().empty());
    CHECK_THROWS_AS(s.undo(), UsageError);
}

TEST_CASE("concretize validation") {
    auto s = d1_session();
    CHECK_THROWS_AS(s.concretize({7}), UsageError);
    s.concretize({0});
    const auto before = s.history().size();
    s.concretize({0});
    CHECK(s.history().size() == before);
    s.concretize({});
    CHECK(s.history().size() == before);
}

TEST_CASE("parent-first") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = random_session(seed, 60, 0.5);
        if (s.status() == SessionStatus::satisfied) continue;
        const auto& h = *s.hierarchy();
        std::optional<NodeId> child;
        for (const auto& node : h.nodes())
            if (node.parent) child = node.id;
        if (!child) continue;
        CHECK_THROWS_AS(s.concretize({*child}), UsageError);
        CHECK(s.history().empty());
        std::vector<NodeId> chain;
        for (std::optional<NodeId> n = child; n; n = h.node(*n).parent) chain.push_back(*n);
        s.concretize(chain); // any order within one call
        CHECK(s.expanded().contains(*child));
        return;
    }
    FAIL("no hierarchy with nested nodes found");
}

TEST_CASE("reset keeps the view") {
    auto s = d1_session();
    s.run_search();
    s.concretize({0});
    s.reset();
    CHECK(s.status() == SessionStatus::searching);
    CHECK(s.subsystem().empty());
    CHECK(s.expanded() == std::set<NodeId>{0});
    s.run_search();
    CHECK(s.status() == SessionStatus::critical);
    CHECK(s.subsystem().vertices() == std::set<VertexId>{0, 1, 3});
}

TEST_CASE("search on a critical session is refused") {
    auto s = d1_session();
    s.run_search();
    CHECK_THROWS_AS(s.run_search(), UsageError);
}

TEST_CASE("budget exhausted status") {
    SessionOptions o;
    o.search.budget.max_steps = 0;
    auto s = d1_session(0.25, o);
    s.run_search();
    CHECK(s.status() == SessionStatus::budget_exhausted);
    CHECK_THROWS_AS(s.run_search(), UsageError);
    CHECK(s.report().status == "budget_exhausted");
}

TEST_CASE("auto refine reaches a concrete critical subsystem") {
    int done = 0;
    for (std::uint64_t seed = 0; seed < 40 && done < 12; ++seed) {
        for (auto policy : {RefinePolicy::mass_greedy, RefinePolicy::expand_all}) {
            auto s = random_session(seed, 50, 0.6);
            if (s.status() == SessionStatus::satisfied) continue;
            s.run_search();
            REQUIRE(s.status() == SessionStatus::critical);
            s.auto_refine(policy);
            CHECK(s.status() == SessionStatus::critical);
            for (VertexId v : s.subsystem().vertices()) CHECK(s.view().vertex(v).kind == VertexKind::concrete);
            const double oracle = oracle_edge_subsystem(s.model(), concrete_edges(s.view(), s.subsystem()),
                                                        std::string(random_target_label));
            CHECK(std::abs(oracle - s.subsystem_probability()) <= 1e-8);
            CHECK(s.property().violated_by(oracle));
            ++done;
        }
    }
    CHECK(done >= 12);
}

TEST_CASE("expand_all without abstract vertices is a no-op") {
    auto s = d1_session();
    s.concretize({0});
    s.run_search();
    const auto h = s.history().size();
    s.auto_refine(RefinePolicy::expand_all);
    CHECK(s.history().size() == h);
}

TEST_CASE("chooser stopping early") {
    auto s = d1_session();
    s.run_search();
    s.auto_refine([](const RefinementSession&) -> std::optional<NodeId> { return std::nullopt; });
    CHECK(s.history().size() == 1);
}

TEST_CASE("report fields") {
    auto s = d1_session();
    s.run_search();
    s.concretize({0});
    const auto r = s.report();
    CHECK_FALSE(r.holds);
    CHECK(r.status == "critical");
    CHECK(r.method == "global");
    CHECK(r.model_states == 4);
    CHECK(r.model_transitions == 6);
    CHECK(r.expanded_nodes == std::vector<std::uint32_t>{0});
    CHECK(r.subsystem_states == 3);
    CHECK(r.subsystem_concrete_states == 3);
    CHECK(r.subsystem_probability == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("export and import round-trip") {
    auto s = d1_session();
    s.run_search();
    s.concretize({0});
    const std::string doc = s.export_document();
    auto t = RefinementSession::import_document(doc);
    CHECK(t.export_document() == doc);
    CHECK(t.subsystem() == s.subsystem());
    CHECK(t.history() == s.history());

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto r = random_session(seed, 80, 0.5);
        if (r.status() == SessionStatus::satisfied) continue;
        r.run_search();
        if (r.status() == SessionStatus::critical) r.auto_refine();
        const std::string text = r.export_document();
        CHECK(RefinementSession::import_document(text).export_document() == text);
    }
}

TEST_CASE("import rejects bad documents") {
    CHECK_THROWS_AS(RefinementSession::import_document("not json"), ParseError);
    CHECK_THROWS_AS(RefinementSession::import_document("{}"), Error);
    auto s = d1_session();
    s.run_search();
    auto doc = s.export_json();
    doc["state"]["status"] = "searching";
    CHECK_THROWS_AS(RefinementSession::import_json(doc), Error);
}

TEST_CASE("strict bound") {
    auto s = RefinementSession::create(share(d2()), {Comparison::less, 0.4, "b"});
    s.run_search();
    CHECK(s.status() == SessionStatus::critical);
    CHECK(s.subsystem_probability() == doctest::Approx(0.4).epsilon(1e-12));
}

}
