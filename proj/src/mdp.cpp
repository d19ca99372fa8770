#include "forensic/mdp.hpp"

#include "forensic/error.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <unordered_map>

namespace forensic {

TechniqueSet available_actions(const InvestigationState& state, const Catalog& catalog)
{
    return catalog.all().minus(state.investigated());
}

InvestigationState apply_outcome(const InvestigationState& state, const Outcome& outcome)
{
    if (state.yes.contains(outcome.technique) || state.no.contains(outcome.technique))
        throw PreconditionError("technique #" + std::to_string(outcome.technique) + " is already investigated");
    InvestigationState next = state;
    if (outcome.used)
        next.yes.insert(outcome.technique);
    else
        next.no.insert(outcome.technique);
    ++next.step;
    return next;
}

KnnTransitionModel::KnnTransitionModel(const Corpus& corpus, KnnParams params)
    : corpus_(&corpus), params_(params)
{
    if (corpus.empty()) throw PreconditionError("cannot estimate probabilities from an empty corpus");
    params_.validate();
}

void KnnTransitionModel::probabilities(const InvestigationState& state, std::span<double> out) const
{
    estimate_all(*corpus_, state, params_.k_at(state.step, corpus_->size()), out);
}

ExplicitTransitionModel::ExplicitTransitionModel(std::vector<WeightedIncident> distribution, std::size_t catalog_size)
    : distribution_(std::move(distribution)), catalog_size_(catalog_size)
{}

double ExplicitTransitionModel::posterior_mass(const InvestigationState& state) const
{
    double mass = 0.0;
    for (const auto& w : distribution_)
        if (state.yes.is_subset_of(w.used) && !state.no.intersects(w.used)) mass += w.probability;
    return mass;
}

void ExplicitTransitionModel::probabilities(const InvestigationState& state, std::span<double> out) const
{
    std::vector<double> hit(catalog_size_, 0.0);
    double mass = 0.0;
    for (const auto& w : distribution_) {
        if (!state.yes.is_subset_of(w.used) || state.no.intersects(w.used)) continue;
        mass += w.probability;
        w.used.for_each([&](TechniqueIndex a) {
            if (a < catalog_size_) hit[a] += w.probability;
        });
    }
    const TechniqueSet done = state.investigated();
    for (std::size_t a = 0; a < catalog_size_ && a < out.size(); ++a)
        out[a] = (mass > 0.0 && !done.contains(a)) ? hit[a] / mass : 0.0;
}

namespace {

struct StateKeyHash {
    std::size_t operator()(const std::pair<TechniqueSet, TechniqueSet>& k) const noexcept
    {
        return hash_words(k.second, hash_words(k.first));
    }
};

class ExactSolver {
public:
    ExactSolver(const Catalog& catalog, std::span<const WeightedIncident> dist, double gamma)
        : catalog_(catalog), dist_(dist), gamma_(gamma), universe_(catalog.all())
    {}

    // Returns Q-values per available action at (yes, no) with `horizon` steps left.
    std::vector<std::optional<double>> q_values(const TechniqueSet& yes, const TechniqueSet& no, std::size_t horizon)
    {
        std::vector<std::optional<double>> q(catalog_.size());
        if (horizon == 0) return q;
        const TechniqueSet avail = universe_.minus(yes | no);
        double mass = 0.0;
        std::vector<double> mass_yes(catalog_.size(), 0.0);
        for (const auto& w : dist_) {
            if (!yes.is_subset_of(w.used) || no.intersects(w.used)) continue;
            mass += w.probability;
            w.used.for_each([&](TechniqueIndex a) {
                if (a < mass_yes.size()) mass_yes[a] += w.probability;
            });
        }
        avail.for_each([&](TechniqueIndex a) {
            const double mass_no = mass - mass_yes[a];
            const double p = mass_yes[a] / mass;
            double v = 0.0;
            if (mass_yes[a] > 0.0) {
                TechniqueSet y2 = yes;
                y2.insert(a);
                v += p * (catalog_[a].ratio() + gamma_ * value(y2, no, horizon - 1));
            }
            if (mass_no > 0.0) {
                TechniqueSet n2 = no;
                n2.insert(a);
                v += (1.0 - p) * gamma_ * value(yes, n2, horizon - 1);
            }
            q[a] = v;
        });
        return q;
    }

    double value(const TechniqueSet& yes, const TechniqueSet& no, std::size_t horizon)
    {
        if (horizon == 0 || (yes | no) == universe_) return 0.0;
        auto key = std::make_pair(yes, no);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        double best = 0.0;
        bool any = false;
        for (const auto& q : q_values(yes, no, horizon)) {
            if (q && (!any || *q > best)) {
                best = *q;
                any = true;
            }
        }
        memo_.emplace(key, best);
        return best;
    }

private:
    const Catalog& catalog_;
    std::span<const WeightedIncident> dist_;
    double gamma_;
    TechniqueSet universe_;
    // Keyed by <Y, N>; horizon is implied by |Y ∪ N| for a fixed root.
    std::unordered_map<std::pair<TechniqueSet, TechniqueSet>, double, StateKeyHash> memo_;
};

} // namespace

ExactSolution solve_exact(const Catalog& catalog, std::span<const WeightedIncident> distribution,
                          const InvestigationState& state, double gamma, std::size_t horizon)
{
    if (catalog.size() > kMaxExactTechniques)
        throw PreconditionError("exact solver supports at most " + std::to_string(kMaxExactTechniques) +
                                " techniques, catalog has " + std::to_string(catalog.size()));
    if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("gamma must lie in (0, 1)");
    if (horizon == 0) throw PreconditionError("horizon must be positive");
    double total = 0.0;
    for (const auto& w : distribution) {
        if (!(w.probability >= 0.0)) throw PreconditionError("negative probability in distribution");
        total += w.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) throw PreconditionError("distribution probabilities must sum to 1");
    if (!state.is_valid_for(catalog)) throw PreconditionError("state is not valid for the catalog");

    ExactSolution sol;
    sol.action_values.assign(catalog.size(), std::nullopt);
    if (available_actions(state, catalog).empty()) return sol;

    ExplicitTransitionModel model({distribution.begin(), distribution.end()}, catalog.size());
    if (!(model.posterior_mass(state) > 0.0))
        throw PreconditionError("state has zero posterior mass under the distribution");

    ExactSolver solver(catalog, distribution, gamma);
    sol.action_values = solver.q_values(state.yes, state.no, horizon);
    for (std::size_t a = 0; a < sol.action_values.size(); ++a) {
        const auto& q = sol.action_values[a];
        if (q && (!sol.action || *q > sol.value)) {
            sol.value = *q;
            sol.action = a;
        }
    }
    return sol;
}

} // namespace forensic
