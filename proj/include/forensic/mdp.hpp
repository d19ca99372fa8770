#pragma once

#include "forensic/dataset.hpp"
#include "forensic/knn.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace forensic {

struct Budget {
    std::optional<double> limit; // nullopt = unlimited
    double spent = 0.0;

    static Budget unlimited() { return {}; }
    static Budget of(double g) { return {g, 0.0}; }

    bool is_limited() const { return limit.has_value(); }
    bool fits(double cost) const { return !limit || spent + cost <= *limit; }
    std::optional<double> remaining() const
    {
        if (!limit) return std::nullopt;
        return *limit - spent;
    }
};

struct Outcome {
    TechniqueIndex technique = 0;
    bool used = false;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

TechniqueSet available_actions(const InvestigationState& state, const Catalog& catalog);

// Value semantics: returns the successor, step + 1. Throws PreconditionError when already investigated.
InvestigationState apply_outcome(const InvestigationState& state, const Outcome& outcome);

inline double step_reward(const Technique& technique, bool used) { return used ? technique.benefit : 0.0; }

// Pr[a used | Y, N] for every catalog technique.
class TransitionModel {
public:
    virtual ~TransitionModel() = default;

    // Writes one entry per catalog index; entries for investigated techniques are 0.
    virtual void probabilities(const InvestigationState& state, std::span<double> out) const = 0;
};

// k-NN regression over a corpus; k follows state.step.
class KnnTransitionModel final : public TransitionModel {
public:
    KnnTransitionModel(const Corpus& corpus, KnnParams params);

    void probabilities(const InvestigationState& state, std::span<double> out) const override;

    const Corpus& corpus() const { return *corpus_; }
    const KnnParams& params() const { return params_; }

private:
    const Corpus* corpus_;
    KnnParams params_;
};

struct WeightedIncident {
    TechniqueSet used;
    double probability = 0.0;
};

// Exact Bayes conditioning of an explicit distribution over used-sets.
// States with zero posterior mass report probability 0 for every action.
class ExplicitTransitionModel final : public TransitionModel {
public:
    ExplicitTransitionModel(std::vector<WeightedIncident> distribution, std::size_t catalog_size);

    void probabilities(const InvestigationState& state, std::span<double> out) const override;
    double posterior_mass(const InvestigationState& state) const;

private:
    std::vector<WeightedIncident> distribution_;
    std::size_t catalog_size_;
};

struct ExactSolution {
    double value = 0.0;
    std::optional<TechniqueIndex> action;
    std::vector<std::optional<double>> action_values; // per catalog index; nullopt when unavailable
};

inline constexpr std::size_t kMaxExactTechniques = 12;

// Exhaustive expectimax of the discounted benefit/cost objective with Bayes
// conditioning on `distribution`. Ties resolve to the lowest catalog index.
ExactSolution solve_exact(const Catalog& catalog, std::span<const WeightedIncident> distribution,
                          const InvestigationState& state, double gamma, std::size_t horizon);

struct DecisionContext {
    std::uint64_t seed = 0;
    std::optional<TechniqueIndex> last_found;
};

class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string_view name() const = 0;
    // An uninvestigated technique, or nullopt when nothing is recommended.
    virtual std::optional<TechniqueIndex> recommend(const InvestigationState& state, const Corpus& corpus,
                                                    const Budget& budget, const DecisionContext& ctx) const = 0;
};

} // namespace forensic
