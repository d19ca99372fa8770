#pragma once

#include "forensic/dataset.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace forensic {

// <Y_t, N_t> plus the investigation step t that drives the k schedule.
struct InvestigationState {
    TechniqueSet yes;
    TechniqueSet no;
    std::size_t step = 0;

    TechniqueSet investigated() const { return yes | no; }
    bool is_valid_for(const Catalog& catalog) const;

    // Identity is <Y, N>; step is bookkeeping.
    friend bool operator==(const InvestigationState& a, const InvestigationState& b)
    {
        return a.yes == b.yes && a.no == b.no;
    }
};

struct KnnParams {
    double beta1 = 1.0;
    double beta2 = 0.0;

    // floor(beta1 + beta2 * t) clamped to [1, corpus_size].
    std::size_t k_at(std::size_t t, std::size_t corpus_size) const;
    void validate() const;
};

// |Y ∩ I_N| + |N ∩ I_Y|
inline std::size_t hamming_distance(const InvestigationState& s, const TechniqueSet& used)
{
    return s.yes.difference_size(used) + s.no.intersection_size(used);
}
std::size_t hamming_distance(const InvestigationState& s, const Incident& incident, const Catalog& catalog);

// |Y ∩ I_Y| + |N ∩ I_N|
inline std::size_t similarity(const InvestigationState& s, const TechniqueSet& used)
{
    return s.yes.intersection_size(used) + s.no.difference_size(used);
}

// Indices of incidents that match the state exactly (distance 0), corpus order.
std::vector<std::size_t> exact_matches(const Corpus& corpus, const InvestigationState& state);

// The k nearest incidents sorted by (distance, corpus index). Throws PreconditionError unless 1 <= k <= |D|.
std::vector<std::size_t> knn_select(const Corpus& corpus, const InvestigationState& state, std::size_t k);

// Pr[a | Y, N] estimated over the floor(beta1 + beta2 t) nearest incidents.
double estimate_probability(const Corpus& corpus, const InvestigationState& state, TechniqueIndex a,
                            const KnnParams& params, std::size_t t);

// Estimates for every catalog technique at once from one neighbor selection.
// Entries for investigated techniques are written as 0.
void estimate_all(const Corpus& corpus, const InvestigationState& state, std::size_t k, std::span<double> out);

} // namespace forensic
