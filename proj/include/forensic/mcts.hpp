#pragma once

#include "forensic/mdp.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

namespace forensic {

struct MctsConfig {
    std::size_t iterations = 10'000; // K
    std::size_t depth = 5;           // D
    double exploration = 2.0;        // M
    std::size_t prune_width = 5;     // F
    double gamma = 0.9;
    std::uint64_t seed = 0;
    // Start R[Y, N] at 0 instead of the random-order estimate.
    bool zero_initial_estimate = false;

    void validate() const;
};

struct StateKey {
    TechniqueSet yes;
    TechniqueSet no;

    friend bool operator==(const StateKey&, const StateKey&) = default;
};

struct StateKeyHash {
    std::size_t operator()(const StateKey& k) const noexcept { return hash_words(k.no, hash_words(k.yes)); }
};

inline StateKey key_of(const InvestigationState& s) { return {s.yes, s.no}; }

// Per-state search tables. action_value and visits stay empty until an action
// is first selected at the state.
struct NodeStats {
    std::vector<double> probability;  // Pr[a | Y, N], memoized
    std::vector<double> action_value; // R[Y, N, a]
    std::vector<std::uint32_t> visits; // n[Y, N, a]
    std::vector<TechniqueIndex> candidates; // pruned action set, best p*B/C first
    double value = 0.0;                // R[Y, N]
    std::uint64_t total_visits = 0;    // n[Y, N]
};

class SearchStats {
public:
    const NodeStats* find(const StateKey& key) const;
    const NodeStats* find(const InvestigationState& s) const { return find(key_of(s)); }

    std::uint32_t visits(const InvestigationState& s, TechniqueIndex a) const;
    double action_value(const InvestigationState& s, TechniqueIndex a) const;
    std::optional<double> state_value(const InvestigationState& s) const;
    // n[Y, N] = sum over actions of n[Y, N, a]
    std::uint64_t total_visits(const InvestigationState& s) const;

    const std::unordered_map<StateKey, NodeStats, StateKeyHash>& nodes() const { return nodes_; }
    std::unordered_map<StateKey, NodeStats, StateKeyHash>& mutable_nodes() { return nodes_; }

private:
    std::unordered_map<StateKey, NodeStats, StateKeyHash> nodes_;
};

// Expected discounted benefit/cost of investigating the remaining techniques in
// uniformly random order: (sum_a p_a B_a / C_a) * (sum_{j<r} gamma^j) / r.
double initial_state_estimate(const InvestigationState& state, std::span<const double> probability,
                              const Catalog& catalog, double gamma);

// The min(F, |available|) available actions with the highest p * B / C, ties by catalog order.
std::vector<TechniqueIndex> prune_candidates(const InvestigationState& state, std::span<const double> probability,
                                             const Catalog& catalog, std::size_t prune_width);

// UCT choice among the pruned candidates: argmax R + M sqrt(ln n / (n_a + 1)),
// ln 0 read as 0, ties by catalog order. Throws PreconditionError at terminal states.
TechniqueIndex exploration_decision(const InvestigationState& state, const SearchStats& stats,
                                    std::span<const double> probability, const Catalog& catalog, double exploration,
                                    std::size_t prune_width);

struct RankedAction {
    TechniqueIndex action = 0;
    double value = 0.0;        // R[Y_t, N_t, a]
    std::uint32_t visits = 0;  // n[Y_t, N_t, a]
    double probability = 0.0;  // Pr[a | Y_t, N_t]
};

struct SearchStep {
    InvestigationState state;
    TechniqueIndex action = 0;
    bool used = false;
};

struct SearchResult {
    TechniqueIndex recommended = 0;
    std::vector<RankedAction> ranked; // every available action, by value then catalog order
    SearchStats stats;
};

// Called once per iteration with the sampled path before backpropagation.
using SearchObserver = std::function<void(std::span<const SearchStep>)>;

SearchResult run_search(const InvestigationState& root, const TransitionModel& model, const Catalog& catalog,
                        const MctsConfig& config, const SearchObserver& observer = {});

SearchResult run_search(const InvestigationState& root, const Corpus& corpus, const KnnParams& knn,
                        const MctsConfig& config);

class MctsPolicy final : public Policy {
public:
    MctsPolicy(KnnParams knn, MctsConfig config) : knn_(knn), config_(config) {}

    std::string_view name() const override { return "mcts"; }
    std::optional<TechniqueIndex> recommend(const InvestigationState& state, const Corpus& corpus, const Budget& budget,
                                            const DecisionContext& ctx) const override;

    const KnnParams& knn() const { return knn_; }
    const MctsConfig& config() const { return config_; }

private:
    KnnParams knn_;
    MctsConfig config_;
};

// One-step lookahead: argmax p * B / C, ties by catalog order. This is what the
// search reduces to at depth 1 with zero initial estimates.
class GreedyPolicy final : public Policy {
public:
    explicit GreedyPolicy(KnnParams knn) : knn_(knn) {}

    std::string_view name() const override { return "greedy"; }
    std::optional<TechniqueIndex> recommend(const InvestigationState& state, const Corpus& corpus, const Budget& budget,
                                            const DecisionContext& ctx) const override;

private:
    KnnParams knn_;
};

} // namespace forensic
