#include "forensic/baselines.hpp"

#include "forensic/error.hpp"

#include <algorithm>

namespace forensic {

StaticPolicyTable StaticPolicyTable::build(const Corpus& corpus)
{
    const auto stats = corpus_stats(corpus);
    StaticPolicyTable table;
    for (std::size_t i = 0; i < stats.frequency.size(); ++i) table.order.push_back({i, stats.frequency[i]});
    std::stable_sort(table.order.begin(), table.order.end(),
                     [](const Entry& a, const Entry& b) { return a.count > b.count; });
    return table;
}

TechniqueIndex static_recommend(const InvestigationState& state, const StaticPolicyTable& table)
{
    const TechniqueSet done = state.investigated();
    for (const auto& e : table.order)
        if (!done.contains(e.technique)) return e.technique;
    throw PreconditionError("no uninvestigated technique left");
}

TechniqueIndex disclose_approx_recommend(const InvestigationState& state, const Corpus& corpus,
                                         const DiscloseApproxConfig& config, std::optional<TechniqueIndex> last_found)
{
    const Catalog& catalog = corpus.catalog();
    const TechniqueSet avail = available_actions(state, catalog);
    if (avail.empty()) throw PreconditionError("no uninvestigated technique left");

    std::vector<double> global(catalog.size(), 0.0);
    std::vector<double> joint(catalog.size(), 0.0);
    double anchor = 0.0;
    for (const auto& inc : corpus.incidents()) {
        const bool has_last = last_found && inc.used.contains(*last_found);
        if (has_last) anchor += 1.0;
        inc.used.for_each([&](TechniqueIndex a) {
            global[a] += 1.0;
            if (has_last) joint[a] += 1.0;
        });
    }

    bool conditional = anchor > 0.0;
    if (conditional) {
        bool co_occurs = false;
        avail.for_each([&](TechniqueIndex a) { co_occurs = co_occurs || joint[a] > 0.0; });
        conditional = co_occurs;
    }
    const double n = static_cast<double>(std::max<std::size_t>(corpus.size(), 1));

    std::optional<TechniqueIndex> best;
    double best_score = 0.0;
    avail.for_each([&](TechniqueIndex a) {
        double score = conditional ? joint[a] / anchor : global[a] / n;
        if (config.weighting == DiscloseWeighting::probability_times_benefit_cost) score *= catalog[a].ratio();
        if (!best || score > best_score) {
            best = a;
            best_score = score;
        }
    });
    return *best;
}

std::optional<TechniqueIndex> StaticPolicy::recommend(const InvestigationState& state, const Corpus& corpus,
                                                      const Budget& /*budget*/, const DecisionContext& /*ctx*/) const
{
    if (available_actions(state, corpus.catalog()).empty()) return std::nullopt;
    return static_recommend(state, StaticPolicyTable::build(corpus));
}

std::optional<TechniqueIndex> DiscloseApproxPolicy::recommend(const InvestigationState& state, const Corpus& corpus,
                                                              const Budget& /*budget*/, const DecisionContext& ctx) const
{
    if (available_actions(state, corpus.catalog()).empty()) return std::nullopt;
    return disclose_approx_recommend(state, corpus, config_, ctx.last_found);
}

} // namespace forensic
