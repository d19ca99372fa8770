#pragma once

#include "forensic/format.hpp"
#include "forensic/mcts.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forensic {

// Right-continuous step function of cumulative benefit over cumulative cost.
// Starts at (0, 0); benefit registers at the cost where its investigation completes.
struct BenefitCurve {
    std::vector<std::pair<double, double>> breakpoints{{0.0, 0.0}};

    void add(double cost, double benefit);
    double at(double cost) const;
};

// Integral of the curve over [0, limit].
double aucbe(const BenefitCurve& curve, double limit);

enum class TerminalReason { budget, exhausted };

std::string_view to_string(TerminalReason r);

struct EpisodeStep {
    TechniqueIndex technique = 0;
    bool used = false;
    double cumulative_cost = 0.0;
    double cumulative_benefit = 0.0;
};

struct EpisodeRecord {
    std::string incident_id;
    std::uint64_t seed = 0;
    TechniqueIndex initial_technique = 0; // Y0 = {initial_technique}
    std::vector<EpisodeStep> steps;
    TerminalReason reason = TerminalReason::exhausted;

    BenefitCurve curve() const;
    double total_benefit() const { return steps.empty() ? 0.0 : steps.back().cumulative_benefit; }
    double total_cost() const { return steps.empty() ? 0.0 : steps.back().cumulative_cost; }
};

// Simulates one investigation of `incident` with Y0 a seed-chosen used
// technique. Throws PreconditionError when the incident is still in the corpus.
EpisodeRecord simulate_episode(const Incident& incident, const Corpus& corpus_without_incident, const Policy& policy,
                               const Budget& budget, std::uint64_t seed);

struct EvaluationOptions {
    Budget budget;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;
    std::size_t repeats = 1; // Y0 draws per incident
};

struct EvaluationReport {
    std::string policy;
    std::optional<double> budget_limit;
    double aucbe_limit = 0.0; // G, or the catalog's total cost when unlimited
    std::vector<EpisodeRecord> episodes; // incident-major, `repeats` per incident
    std::vector<double> episode_aucbe;
    std::vector<double> incident_aucbe; // averaged over repeats
    double mean_aucbe = 0.0;
    std::vector<double> grid; // 0, 1, ..., floor(G) (or ceil of max observed cost)
    std::vector<double> mean_curve;
    std::vector<double> q25_curve;
    std::vector<double> q75_curve;
};

EvaluationReport run_leave_one_out(const Corpus& corpus, const Policy& policy, const EvaluationOptions& options);

// Linear-interpolation quantile (R type 7). `values` need not be sorted.
double quantile(std::vector<double> values, double q);

std::unique_ptr<Policy> make_policy(std::string_view name, const KnnParams& knn, const MctsConfig& mcts);
std::string display_label(std::string_view policy);

// Columns: Budget,<Label>_Benefit_<G>,<Label>_<G>_0.25,<Label>_<G>_0.75 per report.
void write_report_csv(std::ostream& out, const std::vector<const EvaluationReport*>& reports);
// One JSON object per line per episode.
void write_episode_log(std::ostream& out, const EvaluationReport& report, const Catalog& catalog);

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);
std::size_t default_jobs();

} // namespace forensic
