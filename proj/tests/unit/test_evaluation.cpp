#include "forensic/baselines.hpp"
#include "forensic/error.hpp"
#include "forensic/evaluation.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <json.hpp>

#include <sstream>

using namespace forensic;

TEST_CASE("AUCBE examples")
{
    BenefitCurve c;
    c.add(10, 5);
    CHECK(aucbe(c, 20) == 50.0);
    CHECK(aucbe(BenefitCurve{}, 45) == 0.0);
    BenefitCurve flat;
    flat.breakpoints = {{0.0, 3.0}};
    CHECK(aucbe(flat, 7) == 21.0);
    CHECK_THROWS_AS(aucbe(c, 0), PreconditionError);
}

TEST_CASE("benefit curve is right-continuous")
{
    BenefitCurve c;
    c.add(2, 1);
    c.add(5, 4);
    c.add(5, 6);
    CHECK(c.breakpoints.size() == 3);
    CHECK(c.at(0) == 0);
    CHECK(c.at(1.999) == 0);
    CHECK(c.at(2) == 1);
    CHECK(c.at(5) == 6);
    CHECK(c.at(100) == 6);
    // area: 0*2 + 1*3 + 6*(limit-5)
    CHECK(aucbe(c, 10) == 33.0);
    CHECK(aucbe(c, 4) == 2.0);
}

TEST_CASE("quantile uses linear interpolation")
{
    CHECK(quantile({1, 2, 3, 4}, 0.25) == 1.75);
    CHECK(quantile({4, 1, 3, 2}, 0.75) == 3.25);
    CHECK(quantile({7}, 0.25) == 7);
    CHECK(quantile({}, 0.5) == 0);
}

TEST_CASE("static episode follows the frequency permutation truncated at the budget")
{
    // Catalog T1..T4 with costs 1,2,3,4 and benefits 10,20,30,40.
    std::vector<Technique> ts;
    for (int i = 0; i < 4; ++i) ts.push_back({testing::technique_id(i), "", 10.0 * (i + 1), 1.0 * (i + 1)});
    const Catalog cat(ts);
    auto set = [](std::initializer_list<std::size_t> ix) {
        TechniqueSet s;
        for (auto i : ix) s.insert(i);
        return s;
    };
    // Frequencies: T3:3, T4:2, T2:1, T1:1 -> order T3, T4, T1, T2.
    const Corpus prior(cat, {{"A", set({2, 3})}, {"B", set({2, 3, 1})}, {"C", set({2, 0})}});
    const Incident held{"H", set({0, 1})}; // Y0 is T1 or T2

    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        for (double g : {4.0, 7.0, 9.0, 100.0}) {
            const auto rec = simulate_episode(held, prior, StaticPolicy(), Budget::of(g), seed);
            // Hand-rolled step-through.
            const std::vector<TechniqueIndex> order{2, 3, 0, 1};
            double spent = 0, benefit = 0;
            std::vector<EpisodeStep> expect;
            for (auto a : order) {
                if (a == rec.initial_technique) continue;
                if (spent + cat[a].cost > g) break;
                spent += cat[a].cost;
                const bool u = held.used.contains(a);
                if (u) benefit += cat[a].benefit;
                expect.push_back({a, u, spent, benefit});
            }
            REQUIRE(rec.steps.size() == expect.size());
            for (std::size_t i = 0; i < expect.size(); ++i) {
                CHECK(rec.steps[i].technique == expect[i].technique);
                CHECK(rec.steps[i].used == expect[i].used);
                CHECK(rec.steps[i].cumulative_cost == expect[i].cumulative_cost);
                CHECK(rec.steps[i].cumulative_benefit == expect[i].cumulative_benefit);
            }
            CHECK(rec.reason == (g >= 9.0 ? TerminalReason::exhausted : TerminalReason::budget));
        }
    }
}

TEST_CASE("episode with nothing left to discover stays at zero")
{
    const Corpus c = testing::four_incident_corpus();
    const Incident only{"X", TechniqueSet::from_indices({3})};
    const auto rec = simulate_episode(only, c, StaticPolicy(), Budget::unlimited(), 1);
    CHECK(rec.initial_technique == 3);
    CHECK(rec.total_benefit() == 0.0);
    CHECK(rec.steps.size() == 3);
    CHECK(rec.reason == TerminalReason::exhausted);
}

TEST_CASE("leakage guard and empty incidents")
{
    const Corpus c = testing::four_incident_corpus();
    CHECK_THROWS_AS(simulate_episode(c[0], c, StaticPolicy(), Budget::unlimited(), 0), PreconditionError);
    CHECK_THROWS_AS(simulate_episode({"Z", {}}, c, StaticPolicy(), Budget::unlimited(), 0), PreconditionError);
}

TEST_CASE("unlimited budget discovers every used technique")
{
    Rng rng(17);
    const Catalog cat = testing::random_catalog(rng, 9);
    const Corpus c = testing::random_corpus(rng, cat, 10);
    MctsConfig mcts;
    mcts.iterations = 200;
    for (const char* name : {"static", "disclose-approx", "greedy", "mcts"}) {
        const auto policy = make_policy(name, {2, 0.5}, mcts);
        EvaluationOptions opt{Budget::unlimited(), 5, 1, 1};
        const auto report = run_leave_one_out(c, *policy, opt);
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto& ep = report.episodes[i];
            double expected = 0;
            c[i].used.for_each([&](TechniqueIndex a) {
                if (a != ep.initial_technique) expected += cat[a].benefit;
            });
            CHECK(ep.total_benefit() == expected);
            CHECK(ep.steps.size() == cat.size() - 1);
        }
        CHECK(report.aucbe_limit == cat.total_cost());
    }
}

TEST_CASE("three-incident toy corpus matches hand-computed curves")
{
    // T1..T3, costs 2,3,4, benefit 5 each.
    std::vector<Technique> ts{{"T1", "", 5, 2}, {"T2", "", 5, 3}, {"T3", "", 5, 4}};
    const Catalog cat(ts);
    auto set = [](std::initializer_list<std::size_t> ix) {
        TechniqueSet s;
        for (auto i : ix) s.insert(i);
        return s;
    };
    const Corpus c(cat, {{"A", set({0})}, {"B", set({0, 1})}, {"C", set({0, 2})}});
    const auto report = run_leave_one_out(c, StaticPolicy(), {Budget::of(10), 9, 1, 1});
    REQUIRE(report.episodes.size() == 3);
    // A: Y0=T1; prior {B,C} -> order T1,T2,T3; steps T2 (miss, 3), T3 (miss, 7). AUCBE 0.
    CHECK(report.incident_aucbe[0] == 0.0);
    // B: prior {A,C} -> order T1,T3,T2. Y0=T1: T3 miss at 4, T2 hit at 7 -> 5*3 = 15.
    //    Y0=T2: T1 hit at 2, T3 miss at 6 -> 5*8 = 40.
    // C: prior {A,B} -> order T1,T2,T3. Y0=T1: T2 miss at 3, T3 hit at 7 -> 15.
    //    Y0=T3: T1 hit at 2, T2 miss at 5 -> 40.
    for (std::size_t i = 1; i < 3; ++i)
        CHECK(report.incident_aucbe[i] == (report.episodes[i].initial_technique == 0 ? 15.0 : 40.0));
    CHECK(report.grid.size() == 11);
    CHECK(report.mean_aucbe == doctest::Approx((report.incident_aucbe[0] + report.incident_aucbe[1] +
                                                report.incident_aucbe[2]) / 3.0));
}

TEST_CASE("reports are byte-identical for one seed and respect jobs")
{
    Rng rng(23);
    const Catalog cat = testing::random_catalog(rng, 8);
    const Corpus c = testing::random_corpus(rng, cat, 12);
    MctsConfig mcts;
    mcts.iterations = 300;
    MctsPolicy policy({3, 1}, mcts);
    auto render = [&](std::size_t jobs) {
        const auto r = run_leave_one_out(c, policy, {Budget::of(15), 42, jobs, 2});
        std::ostringstream out;
        write_report_csv(out, {&r});
        write_episode_log(out, r, cat);
        return out.str();
    };
    const std::string one = render(1);
    CHECK(one == render(1));
    CHECK(one == render(3));
}

TEST_CASE("report CSV header and episode log layout")
{
    const Corpus c = testing::four_incident_corpus();
    const auto a = run_leave_one_out(c, StaticPolicy(), {Budget::of(45), 1, 1, 1});
    const auto b = run_leave_one_out(c, GreedyPolicy({2, 0}), {Budget::unlimited(), 1, 1, 1});
    std::ostringstream out;
    write_report_csv(out, {&a, &b});
    const std::string header = out.str().substr(0, out.str().find('\n'));
    CHECK(header == "Budget,Static_Benefit_45,Static_45_0.25,Static_45_0.75,Greedy_Benefit_withoutBudget,Greedy_4_0.25,"
                    "Greedy_4_0.75");

    std::ostringstream log;
    write_episode_log(log, a, c.catalog());
    std::istringstream lines(log.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("incident_id"));
        CHECK(j.contains("steps"));
        CHECK(j["policy"] == "static");
        ++n;
    }
    CHECK(n == 4);
}

TEST_CASE("harness preconditions")
{
    const Corpus c = testing::four_incident_corpus();
    CHECK_THROWS_AS(run_leave_one_out(Corpus(c.catalog(), {c[0]}), StaticPolicy(), {}), PreconditionError);
    CHECK_THROWS_AS(make_policy("random", {}, {}), PreconditionError);
}

TEST_CASE("parallel_for covers every index and rethrows")
{
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}
