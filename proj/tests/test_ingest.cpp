#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace testing;

TEST_SUITE("ingest") {

TEST_CASE("one state self loop") {
    const Dtmc m = parse_tra("STATES 1\nTRANSITIONS 1\n0 0 1.0\n");
    CHECK(m.num_states() == 1);
    CHECK(m.successors(0)[0] == Transition{0, 1.0});
}

TEST_CASE("D1 parses and round-trips") {
    const Dtmc m = parse_lab(d1_lab, parse_tra(d1_tra));
    CHECK(m == d1());
    CHECK(write_tra(m) == d1_tra);
    CHECK(write_lab(m) == d1_lab);
    CHECK(parse_lab(write_lab(m), parse_tra(write_tra(m))) == m);
}

TEST_CASE("D2 round-trips byte for byte") {
    const Dtmc m = parse_lab(d2_lab, parse_tra(d2_tra));
    CHECK(m == d2());
    CHECK(write_tra(m) == d2_tra);
    CHECK(write_lab(m) == d2_lab);
}

TEST_CASE("row sum error") {
    CHECK_THROWS_AS(parse_tra("STATES 2\nTRANSITIONS 1\n0 1 0.5\n"), InvalidModel);
}

TEST_CASE("syntax errors carry line numbers") {
    try {
        parse_tra("STATES 2\nTRANSITIONS 2\n0 1 1\n1 x 1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
    CHECK_THROWS_AS(parse_tra("STATES 2\nTRANSITIONS 2\n0 1 1\n5 1 1\n"), ParseError);
    CHECK_THROWS_AS(parse_tra("STATES 2\nTRANSITIONS 3\n0 1 1\n1 1 1\n"), ParseError);
    CHECK_THROWS_AS(parse_tra("TRANSITIONS 1\n"), ParseError);
    CHECK_THROWS_AS(parse_tra("STATES 2\nTRANSITIONS 3\n0 1 0.5\n0 1 0.5\n1 1 1\n"), InvalidModel);
}

TEST_CASE("dialects") {
    SUBCASE("PRISM header, comments, rationals") {
        const Dtmc m = parse_tra("# exported\n4 6\n0 1 1/2\n0 2 1/2\n1 0 0.5\n1 3 5e-1\n2 2 1\n3 3 1\n");
        CHECK(m.num_states() == 4);
        CHECK(m.successors(1)[1] == Transition{3, 0.5});
    }
    SUBCASE("one-based indices") {
        FormatOptions one{true};
        const Dtmc m = parse_tra("STATES 2\nTRANSITIONS 2\n1 2 1\n2 2 1\n", one);
        CHECK(m.successors(0)[0].target == 1);
        CHECK(write_tra(m, one) == "STATES 2\nTRANSITIONS 2\n1 2 1\n2 2 1\n");
        CHECK_THROWS_AS(parse_tra("STATES 1\nTRANSITIONS 1\n0 0 1\n", one), ParseError);
    }
}

TEST_CASE("labels") {
    const Dtmc m = parse_tra(d1_tra);
    CHECK(parse_lab("#DECLARATION\ngoal\n#END\n3 goal\n", m).states_with_label("goal") ==
          std::vector<StateId>{3});
    const Dtmc empty = parse_lab("#DECLARATION\ngoal other\n#END\n", m);
    CHECK(empty.states_with_label("goal").empty());
    CHECK(empty.has_label("other"));
    CHECK_THROWS_AS(parse_lab("#DECLARATION\ngoal\n#END\n9 goal\n", m), ParseError);
    CHECK_THROWS_AS(parse_lab("#DECLARATION\ngoal\n#END\n3 bad\n", m), ParseError);
    CHECK_THROWS_AS(parse_lab("goal\n", m), ParseError);
    CHECK_THROWS_AS(parse_lab("#DECLARATION\ngoal\n", m), ParseError);
}

TEST_CASE("probability formatting round-trips") {
    for (double p : {0.5, 0.1, 1.0 / 3, 2.0 / 3, 1e-17, 0.30000000000000004, 1.0})
        CHECK(parse_probability(format_probability(p)) == p);
    CHECK(format_probability(0.5) == "0.5");
    CHECK(format_probability(1.0) == "1");
    CHECK(parse_probability("3/4") == 0.75);
}

TEST_CASE("random models round-trip through files") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dtmc m = generate_random_dtmc(random_spec(seed, 5 + seed * 7));
        const std::string tra = write_tra(m), lab = write_lab(m);
        const Dtmc back = parse_lab(lab, parse_tra(tra));
        CHECK(back == m);
        CHECK(write_tra(back) == tra);
        CHECK(write_lab(back) == lab);
    }
}

TEST_CASE("load_model reads files") {
    const std::string dir = std::filesystem::temp_directory_path().string();
    {
        std::ofstream(dir + "/cexforge_d1.tra") << d1_tra;
        std::ofstream(dir + "/cexforge_d1.lab") << d1_lab;
    }
    CHECK(load_model(dir + "/cexforge_d1.tra", dir + "/cexforge_d1.lab") == d1());
    CHECK_THROWS_AS(load_model(dir + "/missing.tra", dir + "/cexforge_d1.lab"), Error);
}

TEST_CASE("random generator") {
    SUBCASE("single state") {
        const Dtmc m = generate_random_dtmc(random_spec(0, 1));
        CHECK(m.num_states() == 1);
        CHECK(m.states_with_label(std::string(random_target_label)) == std::vector<StateId>{0});
        CHECK(m.successors(0)[0] == Transition{0, 1.0});
    }
    SUBCASE("deterministic per seed") {
        CHECK(generate_random_dtmc(random_spec(42, 100)) == generate_random_dtmc(random_spec(42, 100)));
        CHECK_FALSE(generate_random_dtmc(random_spec(1, 100)) == generate_random_dtmc(random_spec(2, 100)));
    }
    SUBCASE("valid, with targets and cycles") {
        RandomModelSpec spec = random_spec(42, 1000, 4, 0.3, 0.1);
        const Dtmc m = generate_random_dtmc(spec);
        CHECK(validate_dtmc(m).empty());
        CHECK(m.states_with_label(std::string(random_target_label)).size() == 100);
        const auto sccs = decompose_sccs(m);
        CHECK(std::count(sccs.nontrivial.begin(), sccs.nontrivial.end(), true) > 10);
        for (StateId s = 0; s < m.num_states(); ++s) CHECK(m.successors(s).size() <= 4);
    }
    SUBCASE("invalid specs") {
        CHECK_THROWS_AS(generate_random_dtmc(random_spec(0, 0)), UsageError);
        RandomModelSpec spec = random_spec(0, 3);
        spec.out_degree = 3;
        CHECK_THROWS_AS(generate_random_dtmc(spec), UsageError);
        spec = random_spec(0, 10);
        spec.scc_bias = 1.5;
        CHECK_THROWS_AS(generate_random_dtmc(spec), UsageError);
        spec = random_spec(0, 10);
        spec.target_fraction = 0.0;
        CHECK_THROWS_AS(generate_random_dtmc(spec), UsageError);
    }
}

TEST_CASE("reports") {
    SUBCASE("property holds") {
        auto s = RefinementSession::create(share(d1()), le(0.5, "goal"));
        const std::string text = write_report(s.report());
        CHECK(text.find("property holds, no counterexample") != std::string::npos);
        CHECK(text.find("subsystem") == std::string::npos);
    }
    SUBCASE("D2 global search") {
        auto s = RefinementSession::create(share(d2()), le(0.35, "b"));
        s.run_search();
        const auto doc = report_to_json(s.report());
        CHECK(doc["subsystem_states"] == 3);
        CHECK(doc["subsystem_prob"].get<double>() == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(doc["method"] == "global");
        const std::string text = write_report(s.report());
        CHECK(text.find("subsystem_states=3\n") != std::string::npos);
        CHECK(text.find("# subsystem\nSTATES 5\nTRANSITIONS 2\n0 2 0.4\n2 4 1\n") != std::string::npos);
    }
    SUBCASE("empty subsystem") {
        auto s = RefinementSession::create(share(d2()), le(0.35, "b"));
        const auto doc = report_to_json(s.report());
        CHECK(doc["subsystem_prob"].get<double>() == 0.0);
        CHECK(doc["subsystem_states"] == 0);
        CHECK(doc["status"] == "searching");
    }
    SUBCASE("fixed timestamp makes reports reproducible") {
        auto run = [] {
            auto s = RefinementSession::create(share(d1()), le(0.25, "goal"));
            s.run_search();
            return write_report(s.report(), ReportFormat::json, {true});
        };
        CHECK(run() == run());
    }
}

}
