#include "forensic/baselines.hpp"
#include "forensic/error.hpp"

#include "synthetic.hpp"

#include <doctest.h>

using namespace forensic;

namespace {

InvestigationState state(std::initializer_list<std::size_t> yes, std::initializer_list<std::size_t> no = {})
{
    InvestigationState s;
    for (auto i : yes) s.yes.insert(i);
    for (auto i : no) s.no.insert(i);
    return s;
}

} // namespace

TEST_CASE("static table orders by frequency with catalog-order ties")
{
    const Corpus c = testing::four_incident_corpus();
    const auto table = StaticPolicyTable::build(c);
    REQUIRE(table.order.size() == 4);
    CHECK(table.order[0].technique == 0);
    CHECK(table.order[0].count == 3);
    CHECK(table.order[1].technique == 1);
    CHECK(table.order[2].technique == 2);
    CHECK(table.order[3].count == 0);

    CHECK(static_recommend(state({0}), table) == 1);
    CHECK(static_recommend(state({}), table) == 0);
    CHECK(static_recommend(state({0, 1}, {2}), table) == 3);
    CHECK_THROWS_AS(static_recommend(state({0, 1}, {2, 3}), table), PreconditionError);
}

TEST_CASE("disclose approximation")
{
    const Corpus c = testing::four_incident_corpus();
    const DiscloseApproxConfig prob_only{DiscloseWeighting::probability_only};

    // Pr[T2|T1] = Pr[T3|T1] = 2/3, Pr[T4|T1] = 0 -> T2 by catalog order.
    CHECK(disclose_approx_recommend(state({0}), c, prob_only, 0) == 1);

    // Without a last finding it reduces to the static ordering.
    const auto table = StaticPolicyTable::build(c);
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto s = testing::random_state(rng, 4, 0.5);
        if (available_actions(s, c.catalog()).empty()) continue;
        CHECK(disclose_approx_recommend(s, c, prob_only, std::nullopt) == static_recommend(s, table));
    }

    // T4 never appears, so conditioning on it falls back to global frequency.
    CHECK(disclose_approx_recommend(state({3}), c, prob_only, 3) == 0);
}

TEST_CASE("disclose weighting by benefit over cost")
{
    std::vector<Technique> ts{{"T1", "", 1, 1}, {"T2", "", 1, 1}, {"T3", "", 10, 1}};
    auto set = [](std::initializer_list<std::size_t> ix) {
        TechniqueSet s;
        for (auto i : ix) s.insert(i);
        return s;
    };
    const Corpus c(Catalog(ts), {{"A", set({0, 1})}, {"B", set({0, 1})}, {"C", set({0, 2})}});
    CHECK(disclose_approx_recommend(state({0}), c, {DiscloseWeighting::probability_only}, 0) == 1);
    CHECK(disclose_approx_recommend(state({0}), c, {DiscloseWeighting::probability_times_benefit_cost}, 0) == 2);
}

TEST_CASE("baseline policies use the decision context")
{
    const Corpus c = testing::four_incident_corpus();
    DecisionContext ctx;
    ctx.last_found = 0;
    CHECK(*StaticPolicy().recommend(state({0}), c, Budget::unlimited(), ctx) == 1);
    CHECK(*DiscloseApproxPolicy().recommend(state({0}), c, Budget::unlimited(), ctx) == 1);
    CHECK_FALSE(StaticPolicy().recommend(state({0, 1, 2, 3}), c, Budget::unlimited(), ctx));
}
