#pragma once

#include "forensic/evaluation.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace forensic {

struct GridSpec {
    std::vector<double> beta1_values;
    std::vector<double> beta2_values;

    // beta1 in 1..130 step 1, beta2 in 0..6 step 0.1
    static GridSpec full_range();
    static GridSpec ranges(double beta1_min, double beta1_max, double beta1_step, double beta2_min, double beta2_max,
                           double beta2_step);
    void validate() const;
};

struct KnnGridResult {
    GridSpec grid;
    std::vector<std::vector<double>> heatmap; // [beta1 row][beta2 column] -> mean AUCBE
    double best_beta1 = 0.0;
    double best_beta2 = 0.0;
    double best_score = 0.0;
};

// Mean leave-one-out AUCBE of the depth-1 greedy policy for every grid cell.
// Ties go to the smaller beta1, then the smaller beta2.
KnnGridResult grid_search_knn(const Corpus& corpus, const Budget& budget, const GridSpec& grid, std::uint64_t seed,
                              std::size_t jobs = 1);

// beta2 header row, beta1 label column.
void write_heatmap_csv(std::ostream& out, const KnnGridResult& result);

template <typename T>
struct Interval {
    T min{};
    T max{};
};

struct MctsSearchSpace {
    Interval<std::size_t> iterations{1000, 20000};
    Interval<std::size_t> depth{1, 8};
    Interval<double> exploration{0.0, 10.0};
    Interval<std::size_t> prune_width{1, 10};
    Interval<double> gamma{0.5, 0.99};

    void validate() const;
};

struct MctsTrial {
    MctsConfig config;
    double score = 0.0;
};

struct MctsTuneResult {
    MctsConfig best;
    double best_score = 0.0;
    std::vector<MctsTrial> trials;
};

// Uniform random search over the MCTS constants, scored by mean leave-one-out AUCBE.
MctsTuneResult random_search_mcts(const Corpus& corpus, const Budget& budget, const KnnParams& knn,
                                  std::size_t trial_count, const MctsSearchSpace& space, std::uint64_t seed,
                                  std::size_t jobs = 1);

// Optimal (beta1, beta2) reported per dataset and budget for the public ATT&CK
// corpora ("v6.3", "v10.1", "v11.3"); budget nullopt means unlimited.
std::optional<KnnParams> reference_knn_params(std::string_view dataset, std::optional<double> budget);

} // namespace forensic
