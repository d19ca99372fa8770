// Reproduction on the public ATT&CK-derived corpora. Set FORENSIC_V63_DIR and
// FORENSIC_V113_DIR to directories holding catalog.csv and incidents.csv.
#include "forensic/evaluation.hpp"
#include "forensic/mcts.hpp"
#include "forensic/tuner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

using namespace forensic;

namespace {

constexpr int kSkip = 77;
constexpr double kRelativeTolerance = 0.05;
constexpr double kBeta1Radius = 10.0;
constexpr double kBeta2Radius = 0.5;

struct Target {
    double budget;
    double mcts;
    double static_policy;
};

struct Dataset {
    const char* name;
    const char* env;
    std::size_t incidents;
    std::vector<Target> targets;
};

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail)
{
    std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

bool within(double value, double target) { return std::abs(value - target) <= kRelativeTolerance * target; }

std::optional<Corpus> load(const Dataset& d)
{
    const char* dir = std::getenv(d.env);
    if (!dir) return std::nullopt;
    const std::filesystem::path root(dir);
    return load_corpus_files((root / "catalog.csv").string(), (root / "incidents.csv").string());
}

MctsConfig search_config()
{
    MctsConfig cfg;
    if (const char* k = std::getenv("FORENSIC_MCTS_ITERATIONS")) cfg.iterations = std::stoul(k);
    return cfg;
}

void reproduce(const Dataset& d, const Corpus& corpus)
{
    const std::size_t jobs = default_jobs();
    for (const auto& t : d.targets) {
        const KnnParams knn = *reference_knn_params(d.name, t.budget);
        const auto mcts = make_policy("mcts", knn, search_config());
        const auto baseline = make_policy("static", knn, {});
        const double m = run_leave_one_out(corpus, *mcts, {Budget::of(t.budget), 1, jobs, 1}).mean_aucbe;
        const double s = run_leave_one_out(corpus, *baseline, {Budget::of(t.budget), 1, jobs, 1}).mean_aucbe;
        const std::string tag = std::string(d.name) + "_budget_" + std::to_string(static_cast<int>(t.budget));
        report("reproduction_" + tag,
               within(m, t.mcts) && within(s, t.static_policy) && m > s,
               "MCTS " + std::to_string(m) + " (target " + std::to_string(t.mcts) + "), static " + std::to_string(s) +
                   " (target " + std::to_string(t.static_policy) + ")");
    }
}

void grid_argmax(const Corpus& corpus)
{
    const auto r = grid_search_knn(corpus, Budget::of(45), GridSpec::full_range(), 1, default_jobs());
    const bool pass = std::abs(r.best_beta1 - 40.0) <= kBeta1Radius && std::abs(r.best_beta2 - 1.5) <= kBeta2Radius;
    report("grid_search_argmax", pass,
           "argmax (" + std::to_string(r.best_beta1) + ", " + std::to_string(r.best_beta2) + ") vs (40, 1.5)");
}

} // namespace

int main()
{
    const std::vector<Dataset> datasets{
        {"v6.3", "FORENSIC_V63_DIR", 331, {{45, 3503, 3175}, {65, 6288, 5826}}},
        {"v11.3", "FORENSIC_V113_DIR", 716, {{45, 4061, 3865}, {65, 7072, 6816}}},
    };
    bool any = false;
    for (const auto& d : datasets) {
        std::optional<Corpus> corpus;
        try {
            corpus = load(d);
        } catch (const std::exception& e) {
            report(std::string("reproduction_load_") + d.name, false, e.what());
            continue;
        }
        if (!corpus) {
            std::printf("BLOCKED reproduction_%s: %s is not set\n", d.name, d.env);
            if (std::string(d.name) == "v6.3") std::printf("BLOCKED grid_search_argmax: %s is not set\n", d.env);
            continue;
        }
        any = true;
        if (corpus->size() != d.incidents)
            std::printf("note: %s has %zu incidents, expected %zu\n", d.name, corpus->size(), d.incidents);
        reproduce(d, *corpus);
        if (std::string(d.name) == "v6.3") grid_argmax(*corpus);
    }
    if (!any) return kSkip;
    return failures == 0 ? 0 : 1;
}
