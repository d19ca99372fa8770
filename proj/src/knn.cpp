#include "forensic/knn.hpp"

#include "forensic/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace forensic {

bool InvestigationState::is_valid_for(const Catalog& catalog) const
{
    return !yes.intersects(no) && investigated().is_subset_of(catalog.all());
}

std::size_t KnnParams::k_at(std::size_t t, std::size_t corpus_size) const
{
    if (corpus_size == 0) return 0;
    const double raw = std::floor(beta1 + beta2 * static_cast<double>(t));
    if (!(raw >= 1.0)) return 1;
    if (raw >= static_cast<double>(corpus_size)) return corpus_size;
    return static_cast<std::size_t>(raw);
}

void KnnParams::validate() const
{
    if (!std::isfinite(beta1) || beta1 < 1.0) throw PreconditionError("beta1 must be >= 1");
    if (!std::isfinite(beta2) || beta2 < 0.0) throw PreconditionError("beta2 must be >= 0");
}

std::size_t hamming_distance(const InvestigationState& s, const Incident& incident, const Catalog& catalog)
{
    (void)catalog;
    return hamming_distance(s, incident.used);
}

std::vector<std::size_t> exact_matches(const Corpus& corpus, const InvestigationState& state)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (state.yes.is_subset_of(corpus[i].used) && !state.no.intersects(corpus[i].used)) out.push_back(i);
    return out;
}

namespace {

// Visits the k nearest incidents in corpus order (not distance order). The
// boundary distance bucket is filled in corpus order, so the selected set is
// the first k under the (distance, index) ordering.
template <typename Fn>
void for_each_nearest(const Corpus& corpus, const InvestigationState& state, std::size_t k, Fn&& fn,
                      std::vector<std::uint16_t>* distances = nullptr)
{
    const std::size_t n = corpus.size();
    const std::size_t max_d = state.yes.size() + state.no.size();
    thread_local std::vector<std::uint16_t> dist;
    thread_local std::vector<std::size_t> bucket;
    dist.resize(n);
    bucket.assign(max_d + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = static_cast<std::uint16_t>(hamming_distance(state, corpus[i].used));
        ++bucket[dist[i]];
    }
    std::size_t boundary = 0;
    std::size_t below = 0;
    while (below + bucket[boundary] < k) below += bucket[boundary++];
    std::size_t quota = k - below;
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] < boundary) {
            fn(i);
        } else if (dist[i] == boundary && quota > 0) {
            fn(i);
            --quota;
        }
    }
    if (distances) *distances = dist;
}

void check_k(const Corpus& corpus, std::size_t k)
{
    if (k < 1 || k > corpus.size())
        throw PreconditionError("k=" + std::to_string(k) + " out of range [1, " + std::to_string(corpus.size()) + "]");
}

} // namespace

std::vector<std::size_t> knn_select(const Corpus& corpus, const InvestigationState& state, std::size_t k)
{
    check_k(corpus, k);
    std::vector<std::size_t> out;
    out.reserve(k);
    std::vector<std::uint16_t> dist;
    for_each_nearest(corpus, state, k, [&](std::size_t i) { out.push_back(i); }, &dist);
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return out;
}

double estimate_probability(const Corpus& corpus, const InvestigationState& state, TechniqueIndex a,
                            const KnnParams& params, std::size_t t)
{
    if (corpus.empty()) throw PreconditionError("cannot estimate probabilities from an empty corpus");
    if (state.yes.contains(a) || state.no.contains(a))
        throw PreconditionError("technique " + corpus.catalog()[a].id + " is already investigated");
    const std::size_t k = params.k_at(t, corpus.size());
    std::size_t hits = 0;
    for_each_nearest(corpus, state, k, [&](std::size_t i) { hits += corpus[i].used.contains(a) ? 1 : 0; });
    return static_cast<double>(hits) / static_cast<double>(k);
}

void estimate_all(const Corpus& corpus, const InvestigationState& state, std::size_t k, std::span<double> out)
{
    if (corpus.empty()) throw PreconditionError("cannot estimate probabilities from an empty corpus");
    check_k(corpus, k);
    const std::size_t m = corpus.catalog().size();
    std::vector<std::size_t> hits(m, 0);
    for_each_nearest(corpus, state, k, [&](std::size_t i) {
        corpus[i].used.for_each([&](TechniqueIndex a) { ++hits[a]; });
    });
    const TechniqueSet done = state.investigated();
    const double kd = static_cast<double>(k);
    for (std::size_t a = 0; a < m && a < out.size(); ++a)
        out[a] = done.contains(a) ? 0.0 : static_cast<double>(hits[a]) / kd;
}

} // namespace forensic
