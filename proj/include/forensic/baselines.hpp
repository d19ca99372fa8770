#pragma once

#include "forensic/mdp.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace forensic {

struct StaticPolicyTable {
    struct Entry {
        TechniqueIndex technique = 0;
        std::size_t count = 0;
    };
    std::vector<Entry> order; // descending count, ties by catalog order

    static StaticPolicyTable build(const Corpus& corpus);
};

// Most frequent uninvestigated technique. Throws PreconditionError at terminal states.
TechniqueIndex static_recommend(const InvestigationState& state, const StaticPolicyTable& table);

enum class DiscloseWeighting { probability_only, probability_times_benefit_cost };

struct DiscloseApproxConfig {
    DiscloseWeighting weighting = DiscloseWeighting::probability_times_benefit_cost;
};

// Approximation of DISCLOSE that conditions only on the most recently found
// technique: scores Pr[a | last_found] from pairwise co-occurrence, falling back
// to global frequency when last_found is absent or co-occurs with no candidate.
TechniqueIndex disclose_approx_recommend(const InvestigationState& state, const Corpus& corpus,
                                         const DiscloseApproxConfig& config,
                                         std::optional<TechniqueIndex> last_found);

class StaticPolicy final : public Policy {
public:
    std::string_view name() const override { return "static"; }
    std::optional<TechniqueIndex> recommend(const InvestigationState& state, const Corpus& corpus, const Budget& budget,
                                            const DecisionContext& ctx) const override;
};

class DiscloseApproxPolicy final : public Policy {
public:
    explicit DiscloseApproxPolicy(DiscloseApproxConfig config = {}) : config_(config) {}

    std::string_view name() const override { return "disclose-approx"; }
    std::optional<TechniqueIndex> recommend(const InvestigationState& state, const Corpus& corpus, const Budget& budget,
                                            const DecisionContext& ctx) const override;

private:
    DiscloseApproxConfig config_;
};

} // namespace forensic
