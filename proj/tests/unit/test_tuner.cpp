#include "forensic/error.hpp"
#include "forensic/tuner.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <sstream>

using namespace forensic;

TEST_CASE("grid ranges")
{
    const auto g = GridSpec::full_range();
    CHECK(g.beta1_values.size() == 130);
    CHECK(g.beta1_values.front() == 1);
    CHECK(g.beta1_values.back() == 130);
    CHECK(g.beta2_values.size() == 61);
    CHECK(g.beta2_values[15] == 1.5);
    CHECK(g.beta2_values.back() == 6.0);
    CHECK_THROWS_AS(GridSpec::ranges(5, 1, 1, 0, 1, 0.5), PreconditionError);
    CHECK_THROWS_AS(GridSpec::ranges(1, 5, 0, 0, 1, 0.5), PreconditionError);
    CHECK_THROWS_AS(GridSpec::ranges(0, 5, 1, 0, 1, 0.5), PreconditionError);
}

TEST_CASE("a 2x2 grid equals four independent evaluations")
{
    Rng rng(31);
    const Catalog cat = testing::random_catalog(rng, 6);
    const Corpus c = testing::random_corpus(rng, cat, 5);
    const GridSpec grid = GridSpec::ranges(1, 3, 2, 0, 0.5, 0.5);
    const auto r = grid_search_knn(c, Budget::of(12), grid, 7, 2);
    REQUIRE(r.heatmap.size() == 2);
    double best = -1;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            GreedyPolicy p({grid.beta1_values[i], grid.beta2_values[j]});
            const double v = run_leave_one_out(c, p, {Budget::of(12), 7, 1, 1}).mean_aucbe;
            CHECK(r.heatmap[i][j] == v);
            best = std::max(best, v);
        }
    }
    CHECK(r.best_score == best);
    CHECK(grid_search_knn(c, Budget::of(12), grid, 7, 1).heatmap == r.heatmap);
}

TEST_CASE("heatmap is constant across beta2 once k is clamped")
{
    // T2 always follows T1.
    const Catalog cat = testing::unit_catalog(4);
    std::vector<Incident> incs;
    for (int i = 0; i < 6; ++i) {
        TechniqueSet s = TechniqueSet::from_indices({0, 1});
        if (i % 2) s.insert(2 + (i % 4 == 1 ? 0 : 1));
        incs.push_back({"I" + std::to_string(i), s});
    }
    const Corpus c(cat, incs);
    const GridSpec grid = GridSpec::ranges(6, 8, 1, 0, 2, 0.5);
    const auto r = grid_search_knn(c, Budget::of(3), grid, 1, 1);
    for (const auto& row : r.heatmap)
        for (double v : row) CHECK(v == r.heatmap[0][0]);
    // Ties resolve to the smallest beta1 and beta2.
    CHECK(r.best_beta1 == 6);
    CHECK(r.best_beta2 == 0);
}

TEST_CASE("heatmap CSV layout")
{
    KnnGridResult r;
    r.grid = GridSpec::ranges(1, 2, 1, 0, 0.5, 0.5);
    r.heatmap = {{1, 2}, {3, 4.5}};
    std::ostringstream out;
    write_heatmap_csv(out, r);
    CHECK(out.str() == "beta1\\beta2,0,0.5\n1,1,2\n2,3,4.5\n");
}

TEST_CASE("random MCTS search")
{
    Rng rng(41);
    const Catalog cat = testing::random_catalog(rng, 6);
    const Corpus c = testing::random_corpus(rng, cat, 6);
    MctsSearchSpace space;
    space.iterations = {20, 60};
    space.depth = {1, 3};

    SUBCASE("one trial returns that config")
    {
        const auto r = random_search_mcts(c, Budget::of(10), {2, 0}, 1, space, 3, 1);
        REQUIRE(r.trials.size() == 1);
        CHECK(r.best.iterations == r.trials[0].config.iterations);
        CHECK(r.best_score == r.trials[0].score);
    }
    SUBCASE("collapsed ranges return that exact config and its score")
    {
        MctsSearchSpace point;
        point.iterations = {30, 30};
        point.depth = {2, 2};
        point.exploration = {1.5, 1.5};
        point.prune_width = {3, 3};
        point.gamma = {0.8, 0.8};
        const auto r = random_search_mcts(c, Budget::of(10), {2, 0}, 2, point, 3, 1);
        CHECK(r.best.iterations == 30);
        CHECK(r.best.depth == 2);
        CHECK(r.best.exploration == 1.5);
        CHECK(r.best.prune_width == 3);
        CHECK(r.best.gamma == 0.8);
        CHECK(r.trials[0].score == r.trials[1].score);
    }
    SUBCASE("best is at least every logged trial and deterministic")
    {
        const auto r = random_search_mcts(c, Budget::of(10), {2, 0}, 20, space, 5, 2);
        for (const auto& t : r.trials) CHECK(r.best_score >= t.score);
        const auto again = random_search_mcts(c, Budget::of(10), {2, 0}, 20, space, 5, 1);
        CHECK(again.best_score == r.best_score);
        CHECK(again.best.iterations == r.best.iterations);
    }
    SUBCASE("empty ranges are rejected")
    {
        MctsSearchSpace bad;
        bad.depth = {4, 2};
        CHECK_THROWS_AS(random_search_mcts(c, Budget::of(10), {2, 0}, 3, bad, 1, 1), PreconditionError);
        CHECK_THROWS_AS(random_search_mcts(c, Budget::of(10), {2, 0}, 0, space, 1, 1), PreconditionError);
    }
}

TEST_CASE("reference beta table")
{
    CHECK(reference_knn_params("v6.3", 45)->beta1 == 40);
    CHECK(reference_knn_params("v6.3", 45)->beta2 == 1.5);
    CHECK(reference_knn_params("v10.1", std::nullopt)->beta1 == 87);
    CHECK(reference_knn_params("v11.3", 70)->beta2 == 2.2);
    CHECK_FALSE(reference_knn_params("v6.3", 50));
    CHECK_FALSE(reference_knn_params("v9", 45));
}
