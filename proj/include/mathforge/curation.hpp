#pragma once

#include <utility>
#include <vector>

#include "mathforge/types.hpp"

namespace mathforge::curation {

// Exact cosine kNN over unit vectors. Each item's list holds min(k, n-1)
// (neighbor index, similarity) entries sorted by similarity descending;
// similarity ties order by lower index. Never contains the item itself.
struct NeighborIndex {
    int k = 0;
    std::vector<std::vector<std::pair<int, double>>> neighbors;
};

NeighborIndex build_knn(const std::vector<EmbeddingVector>& embeddings, int k);

// Row-stochastic matrix over discrete score levels: row a, column b holds the
// smoothed probability that an item scored at level a sits in a neighborhood
// whose majority level is b. Persisted as a judge-noise diagnostic.
struct TransitionMatrix {
    std::vector<double> levels;
    std::vector<std::vector<double>> rows;

    // Off-diagonal mass of one row: the estimated chance that an item at this
    // level disagrees with its neighborhood.
    double noise_estimate(std::size_t level_index) const;
};

// Half-point levels 0, 0.5, ..., 5.
const std::vector<double>& default_levels();

// Nearest level; exact midpoints round up.
double snap_to_levels(double score, const std::vector<double>& levels = default_levels());

// Scores must sit exactly on levels. Majority level of an item's k neighbors
// breaks ties toward the level closest to the item's own, then the lower
// level. Laplace smoothing (alpha = 1 per cell) is applied before
// normalization, so every row sums to 1 even at empty levels.
TransitionMatrix estimate_transition(const std::vector<double>& level_scores,
                                     const NeighborIndex& index,
                                     const std::vector<double>& levels = default_levels());

struct CurationParams {
    double deviation_threshold = 1.5;  // own score vs neighborhood mean
    int min_agreement = 4;             // neighbors that must sit in a stable spot
};

// Neighborhood-consistency correction. For each item: take the
// similarity-weighted mean of its neighbors' scores; when the item deviates
// from that mean by more than the threshold AND at least min_agreement of its
// neighbors score within threshold/2 of that mean (the neighborhood agrees
// with its own consensus), replace the score with the weighted mean snapped
// to the nearest 0.5 step. Everything else passes through untouched.
std::vector<double> curate(const std::vector<double>& scores, const NeighborIndex& index,
                           const CurationParams& params);

}  // namespace mathforge::curation
