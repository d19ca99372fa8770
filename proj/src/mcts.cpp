#include "forensic/mcts.hpp"

#include "forensic/error.hpp"
#include "forensic/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace forensic {

void MctsConfig::validate() const
{
    if (iterations == 0) throw PreconditionError("iterations must be positive");
    if (depth == 0) throw PreconditionError("depth must be positive");
    if (!std::isfinite(exploration) || exploration < 0.0) throw PreconditionError("exploration must be >= 0");
    if (prune_width == 0) throw PreconditionError("prune width must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("gamma must lie in (0, 1)");
}

const NodeStats* SearchStats::find(const StateKey& key) const
{
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
}

std::uint32_t SearchStats::visits(const InvestigationState& s, TechniqueIndex a) const
{
    const auto* n = find(s);
    return (n && a < n->visits.size()) ? n->visits[a] : 0;
}

double SearchStats::action_value(const InvestigationState& s, TechniqueIndex a) const
{
    const auto* n = find(s);
    return (n && a < n->action_value.size()) ? n->action_value[a] : 0.0;
}

std::optional<double> SearchStats::state_value(const InvestigationState& s) const
{
    if (const auto* n = find(s)) return n->value;
    return std::nullopt;
}

std::uint64_t SearchStats::total_visits(const InvestigationState& s) const
{
    const auto* n = find(s);
    if (!n) return 0;
    return std::accumulate(n->visits.begin(), n->visits.end(), std::uint64_t{0});
}

double initial_state_estimate(const InvestigationState& state, std::span<const double> probability,
                              const Catalog& catalog, double gamma)
{
    const TechniqueSet remaining = available_actions(state, catalog);
    const std::size_t r = remaining.size();
    if (r == 0) return 0.0;
    double expected = 0.0;
    remaining.for_each([&](TechniqueIndex a) { expected += probability[a] * catalog[a].ratio(); });
    double discount_sum = 0.0;
    double g = 1.0;
    for (std::size_t j = 0; j < r; ++j) {
        discount_sum += g;
        g *= gamma;
    }
    return expected * discount_sum / static_cast<double>(r);
}

std::vector<TechniqueIndex> prune_candidates(const InvestigationState& state, std::span<const double> probability,
                                             const Catalog& catalog, std::size_t prune_width)
{
    std::vector<TechniqueIndex> avail = available_actions(state, catalog).to_indices();
    const std::size_t keep = std::min(prune_width, avail.size());
    auto better = [&](TechniqueIndex a, TechniqueIndex b) {
        const double sa = probability[a] * catalog[a].ratio();
        const double sb = probability[b] * catalog[b].ratio();
        if (sa != sb) return sa > sb;
        return a < b;
    };
    std::partial_sort(avail.begin(), avail.begin() + static_cast<std::ptrdiff_t>(keep), avail.end(), better);
    avail.resize(keep);
    return avail;
}

namespace {

TechniqueIndex uct_argmax(std::span<const TechniqueIndex> candidates, std::span<const double> action_value,
                          std::span<const std::uint32_t> visits, std::uint64_t total_visits, double exploration)
{
    const double log_n = total_visits > 0 ? std::log(static_cast<double>(total_visits)) : 0.0;
    TechniqueIndex best = candidates.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (auto a : candidates) {
        const double r = action_value.empty() ? 0.0 : action_value[a];
        const double n_a = visits.empty() ? 0.0 : static_cast<double>(visits[a]);
        const double score = r + exploration * std::sqrt(log_n / (n_a + 1.0));
        if (score > best_score || (score == best_score && a < best)) {
            best = a;
            best_score = score;
        }
    }
    return best;
}

class Search {
public:
    Search(const TransitionModel& model, const Catalog& catalog, const MctsConfig& config, SearchStats& stats)
        : model_(model), catalog_(catalog), config_(config), stats_(stats), universe_(catalog.all()),
          ratio_(catalog.size())
    {
        for (std::size_t a = 0; a < catalog.size(); ++a) ratio_[a] = catalog[a].ratio();
    }

    NodeStats& node(const InvestigationState& s)
    {
        auto& nodes = stats_.mutable_nodes();
        auto [it, inserted] = nodes.try_emplace(key_of(s));
        NodeStats& n = it->second;
        if (inserted) {
            n.probability.assign(catalog_.size(), 0.0);
            model_.probabilities(s, n.probability);
            n.value = config_.zero_initial_estimate ? 0.0
                                                    : initial_state_estimate(s, n.probability, catalog_, config_.gamma);
        }
        return n;
    }

    double value_of(const InvestigationState& s)
    {
        if (s.investigated() == universe_) return 0.0;
        return node(s).value;
    }

    TechniqueIndex select(const InvestigationState& s, NodeStats& n)
    {
        if (n.visits.empty()) {
            n.visits.assign(catalog_.size(), 0);
            n.action_value.assign(catalog_.size(), 0.0);
            n.candidates = prune_candidates(s, n.probability, catalog_, config_.prune_width);
        }
        return uct_argmax(n.candidates, n.action_value, n.visits, n.total_visits, config_.exploration);
    }

    void backpropagate(const SearchStep& step)
    {
        const auto& s = step.state;
        const TechniqueIndex a = step.action;
        NodeStats& n = node(s);
        const double p = n.probability[a];
        double q = 0.0;
        if (p > 0.0) {
            InvestigationState y = s;
            y.yes.insert(a);
            ++y.step;
            q += p * (ratio_[a] + config_.gamma * value_of(y));
        }
        if (p < 1.0) {
            InvestigationState no = s;
            no.no.insert(a);
            ++no.step;
            q += (1.0 - p) * config_.gamma * value_of(no);
        }
        // value_of may have inserted nodes; references into unordered_map stay valid.
        n.action_value[a] = q;
        double best = 0.0;
        bool any = false;
        universe_.minus(s.investigated()).for_each([&](TechniqueIndex b) {
            if (!any || n.action_value[b] > best) {
                best = n.action_value[b];
                any = true;
            }
        });
        n.value = best;
    }

    void run(const InvestigationState& root, const SearchObserver& observer)
    {
        Rng rng(config_.seed);
        std::vector<SearchStep> path;
        path.reserve(std::min(config_.depth, catalog_.size()));
        for (std::size_t iter = 0; iter < config_.iterations; ++iter) {
            path.clear();
            InvestigationState s = root;
            while (s.investigated() != universe_ && path.size() < config_.depth) {
                NodeStats& n = node(s);
                const TechniqueIndex a = select(s, n);
                ++n.visits[a];
                ++n.total_visits;
                const bool used = fair_coin(rng);
                path.push_back({s, a, used});
                s = apply_outcome(s, {a, used});
            }
            if (observer) observer(path);
            for (auto it = path.rbegin(); it != path.rend(); ++it) backpropagate(*it);
        }
    }

private:
    const TransitionModel& model_;
    const Catalog& catalog_;
    const MctsConfig& config_;
    SearchStats& stats_;
    TechniqueSet universe_;
    std::vector<double> ratio_;
};

} // namespace

TechniqueIndex exploration_decision(const InvestigationState& state, const SearchStats& stats,
                                    std::span<const double> probability, const Catalog& catalog, double exploration,
                                    std::size_t prune_width)
{
    if (available_actions(state, catalog).empty()) throw PreconditionError("exploration decision at a terminal state");
    if (prune_width == 0) throw PreconditionError("prune width must be positive");
    const auto candidates = prune_candidates(state, probability, catalog, prune_width);
    const NodeStats* n = stats.find(state);
    if (!n) return uct_argmax(candidates, {}, {}, 0, exploration);
    const std::uint64_t total = std::accumulate(n->visits.begin(), n->visits.end(), std::uint64_t{0});
    return uct_argmax(candidates, n->action_value, n->visits, total, exploration);
}

SearchResult run_search(const InvestigationState& root, const TransitionModel& model, const Catalog& catalog,
                        const MctsConfig& config, const SearchObserver& observer)
{
    config.validate();
    if (!root.is_valid_for(catalog)) throw PreconditionError("root state is not valid for the catalog");
    const TechniqueSet avail = available_actions(root, catalog);
    if (avail.empty()) throw PreconditionError("cannot search from a terminal state");

    SearchResult result;
    Search search(model, catalog, config, result.stats);
    search.run(root, observer);

    const NodeStats& rn = search.node(root);
    avail.for_each([&](TechniqueIndex a) {
        RankedAction r;
        r.action = a;
        r.value = rn.action_value.empty() ? 0.0 : rn.action_value[a];
        r.visits = rn.visits.empty() ? 0 : rn.visits[a];
        r.probability = rn.probability[a];
        result.ranked.push_back(r);
    });
    std::stable_sort(result.ranked.begin(), result.ranked.end(),
                     [](const RankedAction& x, const RankedAction& y) { return x.value > y.value; });
    result.recommended = result.ranked.front().action;
    return result;
}

SearchResult run_search(const InvestigationState& root, const Corpus& corpus, const KnnParams& knn,
                        const MctsConfig& config)
{
    KnnTransitionModel model(corpus, knn);
    return run_search(root, model, corpus.catalog(), config);
}

std::optional<TechniqueIndex> MctsPolicy::recommend(const InvestigationState& state, const Corpus& corpus,
                                                    const Budget& /*budget*/, const DecisionContext& ctx) const
{
    if (available_actions(state, corpus.catalog()).empty()) return std::nullopt;
    MctsConfig cfg = config_;
    cfg.seed = ctx.seed;
    return run_search(state, corpus, knn_, cfg).recommended;
}

std::optional<TechniqueIndex> GreedyPolicy::recommend(const InvestigationState& state, const Corpus& corpus,
                                                      const Budget& /*budget*/, const DecisionContext& /*ctx*/) const
{
    const Catalog& catalog = corpus.catalog();
    const TechniqueSet avail = available_actions(state, catalog);
    if (avail.empty()) return std::nullopt;
    std::vector<double> p(catalog.size());
    estimate_all(corpus, state, knn_.k_at(state.step, corpus.size()), p);
    std::optional<TechniqueIndex> best;
    double best_score = 0.0;
    avail.for_each([&](TechniqueIndex a) {
        const double score = p[a] * catalog[a].ratio();
        if (!best || score > best_score) {
            best = a;
            best_score = score;
        }
    });
    return best;
}

} // namespace forensic
