#include "forensic/tuner.hpp"

#include "forensic/error.hpp"
#include "forensic/rng.hpp"

#include <cmath>
#include <ostream>

namespace forensic {

namespace {

std::vector<double> arange(double lo, double hi, double step, const char* what)
{
    if (!(step > 0.0)) throw PreconditionError(std::string(what) + " step must be positive");
    if (hi < lo) throw PreconditionError(std::string(what) + " range is empty");
    std::vector<double> out;
    // Integer multiples avoid accumulated drift (0.1 * 60 stays 6).
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        out.push_back(std::round(v * 1e9) / 1e9);
    }
    return out;
}

} // namespace

GridSpec GridSpec::full_range()
{
    return ranges(1, 130, 1, 0, 6, 0.1);
}

GridSpec GridSpec::ranges(double b1_min, double b1_max, double b1_step, double b2_min, double b2_max, double b2_step)
{
    GridSpec g;
    g.beta1_values = arange(b1_min, b1_max, b1_step, "beta1");
    g.beta2_values = arange(b2_min, b2_max, b2_step, "beta2");
    g.validate();
    return g;
}

void GridSpec::validate() const
{
    if (beta1_values.empty() || beta2_values.empty()) throw PreconditionError("grid ranges must be non-empty");
    for (double b : beta1_values) KnnParams{b, 0.0}.validate();
    for (double b : beta2_values) KnnParams{1.0, b}.validate();
}

KnnGridResult grid_search_knn(const Corpus& corpus, const Budget& budget, const GridSpec& grid, std::uint64_t seed,
                              std::size_t jobs)
{
    grid.validate();
    KnnGridResult result;
    result.grid = grid;
    const std::size_t rows = grid.beta1_values.size();
    const std::size_t cols = grid.beta2_values.size();
    result.heatmap.assign(rows, std::vector<double>(cols, 0.0));

    EvaluationOptions options;
    options.budget = Budget{budget.limit, 0.0};
    options.master_seed = seed;
    options.jobs = 1;
    parallel_for(rows * cols, jobs, [&](std::size_t cell) {
        const std::size_t r = cell / cols;
        const std::size_t c = cell % cols;
        GreedyPolicy policy(KnnParams{grid.beta1_values[r], grid.beta2_values[c]});
        result.heatmap[r][c] = run_leave_one_out(corpus, policy, options).mean_aucbe;
    });

    bool first = true;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (first || result.heatmap[r][c] > result.best_score) {
                result.best_score = result.heatmap[r][c];
                result.best_beta1 = grid.beta1_values[r];
                result.best_beta2 = grid.beta2_values[c];
                first = false;
            }
        }
    }
    return result;
}

void write_heatmap_csv(std::ostream& out, const KnnGridResult& result)
{
    out << "beta1\\beta2";
    for (double b2 : result.grid.beta2_values) out << ',' << format_number(b2);
    out << '\n';
    for (std::size_t r = 0; r < result.heatmap.size(); ++r) {
        out << format_number(result.grid.beta1_values[r]);
        for (double v : result.heatmap[r]) out << ',' << format_number(v);
        out << '\n';
    }
}

void MctsSearchSpace::validate() const
{
    if (iterations.min > iterations.max || depth.min > depth.max || prune_width.min > prune_width.max ||
        exploration.min > exploration.max || gamma.min > gamma.max)
        throw PreconditionError("MCTS search space has an empty range");
    if (iterations.min == 0 || depth.min == 0 || prune_width.min == 0)
        throw PreconditionError("iterations, depth and prune width ranges must start at 1 or more");
    if (exploration.min < 0.0) throw PreconditionError("exploration range must be non-negative");
    if (!(gamma.min > 0.0 && gamma.max < 1.0)) throw PreconditionError("gamma range must lie inside (0, 1)");
}

MctsTuneResult random_search_mcts(const Corpus& corpus, const Budget& budget, const KnnParams& knn,
                                  std::size_t trial_count, const MctsSearchSpace& space, std::uint64_t seed,
                                  std::size_t jobs)
{
    if (trial_count == 0) throw PreconditionError("trial count must be at least 1");
    space.validate();
    knn.validate();

    Rng rng(seed);
    auto pick_int = [&](const Interval<std::size_t>& iv) {
        return iv.min + static_cast<std::size_t>(uniform_index(rng, iv.max - iv.min + 1));
    };
    auto pick_real = [&](const Interval<double>& iv) { return iv.min + uniform_unit(rng) * (iv.max - iv.min); };

    MctsTuneResult result;
    for (std::size_t t = 0; t < trial_count; ++t) {
        MctsConfig cfg;
        cfg.iterations = pick_int(space.iterations);
        cfg.depth = pick_int(space.depth);
        cfg.exploration = pick_real(space.exploration);
        cfg.prune_width = pick_int(space.prune_width);
        cfg.gamma = pick_real(space.gamma);
        result.trials.push_back({cfg, 0.0});
    }

    EvaluationOptions options;
    options.budget = Budget{budget.limit, 0.0};
    options.master_seed = derive_seed(seed, 0x7475'6e65ULL);
    options.jobs = jobs;
    for (auto& trial : result.trials) {
        MctsPolicy policy(knn, trial.config);
        trial.score = run_leave_one_out(corpus, policy, options).mean_aucbe;
    }

    result.best = result.trials.front().config;
    result.best_score = result.trials.front().score;
    for (const auto& trial : result.trials) {
        if (trial.score > result.best_score) {
            result.best = trial.config;
            result.best_score = trial.score;
        }
    }
    return result;
}

std::optional<KnnParams> reference_knn_params(std::string_view dataset, std::optional<double> budget)
{
    struct Row {
        std::string_view dataset;
        double budget; // 0 = unlimited
        KnnParams params;
    };
    static constexpr Row table[] = {
        {"v6.3", 45, {40, 1.5}},   {"v6.3", 65, {51, 2.6}},   {"v6.3", 70, {51, 2.6}},
        {"v6.3", 100, {57, 0.9}},  {"v6.3", 0, {47, 0}},      {"v10.1", 45, {81, 1.4}},
        {"v10.1", 65, {80, 1.8}},  {"v10.1", 70, {84, 0}},    {"v10.1", 100, {82, 0.2}},
        {"v10.1", 0, {87, 1}},     {"v11.3", 45, {39, 3.5}},  {"v11.3", 65, {39, 3.5}},
        {"v11.3", 70, {103, 2.2}}, {"v11.3", 100, {118, 0.6}}, {"v11.3", 0, {118, 0.6}},
    };
    const double key = budget ? *budget : 0.0;
    for (const auto& row : table)
        if (row.dataset == dataset && row.budget == key) return row.params;
    return std::nullopt;
}

} // namespace forensic
