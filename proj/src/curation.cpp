#include "mathforge/curation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mathforge::curation {

NeighborIndex build_knn(const std::vector<EmbeddingVector>& embeddings, int k) {
    const std::size_t n = embeddings.size();
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (n < 2) throw std::invalid_argument("need at least 2 items to build a neighbor index");
    const std::size_t dim = embeddings.front().dim();
    for (const auto& e : embeddings)
        if (e.dim() != dim) throw std::invalid_argument("embedding dimension mismatch");

    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);
    NeighborIndex index;
    index.k = k;
    index.neighbors.resize(n);

    std::vector<std::pair<int, double>> candidates;
    candidates.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        candidates.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            candidates.emplace_back(static_cast<int>(j), cosine(embeddings[i], embeddings[j]));
        }
        std::partial_sort(candidates.begin(),
                          candidates.begin() + static_cast<std::ptrdiff_t>(m), candidates.end(),
                          [](const auto& a, const auto& b) {
                              if (a.second != b.second) return a.second > b.second;
                              return a.first < b.first;
                          });
        index.neighbors[i].assign(candidates.begin(),
                                  candidates.begin() + static_cast<std::ptrdiff_t>(m));
    }
    return index;
}

const std::vector<double>& default_levels() {
    static const std::vector<double> levels = [] {
        std::vector<double> v;
        for (int i = 0; i <= 10; ++i) v.push_back(i * 0.5);
        return v;
    }();
    return levels;
}

double snap_to_levels(double score, const std::vector<double>& levels) {
    if (levels.empty()) throw std::invalid_argument("levels must not be empty");
    double best = levels.front();
    double best_dist = std::abs(score - best);
    for (double level : levels) {
        const double d = std::abs(score - level);
        // Strict improvement keeps the lower level on exact midpoints until a
        // higher level matches; prefer the higher one there (round half up).
        if (d < best_dist || (d == best_dist && level > best && score >= (best + level) / 2.0)) {
            best = level;
            best_dist = d;
        }
    }
    return best;
}

double TransitionMatrix::noise_estimate(std::size_t level_index) const {
    if (level_index >= rows.size()) throw std::out_of_range("level index out of range");
    return 1.0 - rows[level_index][level_index];
}

namespace {

std::size_t exact_level_index(double score, const std::vector<double>& levels) {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (std::abs(score - levels[i]) <= 1e-9) return i;
    throw std::invalid_argument("score " + std::to_string(score) + " is not a valid level");
}

}  // namespace

TransitionMatrix estimate_transition(const std::vector<double>& level_scores,
                                     const NeighborIndex& index,
                                     const std::vector<double>& levels) {
    const std::size_t n = level_scores.size();
    if (n == 0) throw std::invalid_argument("no scores to estimate a transition matrix from");
    if (index.neighbors.size() != n)
        throw std::invalid_argument("neighbor index does not cover the score set");

    std::vector<std::size_t> own(n);
    for (std::size_t i = 0; i < n; ++i) own[i] = exact_level_index(level_scores[i], levels);

    const std::size_t num_levels = levels.size();
    std::vector<std::vector<std::size_t>> counts(num_levels,
                                                 std::vector<std::size_t>(num_levels, 0));

    std::vector<std::size_t> freq(num_levels);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(freq.begin(), freq.end(), 0);
        for (const auto& [j, sim] : index.neighbors[i]) {
            (void)sim;
            ++freq[own[static_cast<std::size_t>(j)]];
        }
        // Majority level; ties -> closest to own level, then the lower level.
        std::size_t best = 0;
        bool have = false;
        for (std::size_t lvl = 0; lvl < num_levels; ++lvl) {
            if (freq[lvl] == 0) continue;
            if (!have) {
                best = lvl;
                have = true;
                continue;
            }
            if (freq[lvl] > freq[best]) {
                best = lvl;
            } else if (freq[lvl] == freq[best]) {
                const double d_new = std::abs(levels[lvl] - levels[own[i]]);
                const double d_best = std::abs(levels[best] - levels[own[i]]);
                if (d_new < d_best || (d_new == d_best && levels[lvl] < levels[best])) best = lvl;
            }
        }
        if (have) ++counts[own[i]][best];
    }

    TransitionMatrix t;
    t.levels = levels;
    t.rows.assign(num_levels, std::vector<double>(num_levels, 0.0));
    for (std::size_t a = 0; a < num_levels; ++a) {
        std::size_t row_total = 0;
        for (std::size_t b = 0; b < num_levels; ++b) row_total += counts[a][b];
        const double denom = static_cast<double>(row_total + num_levels);
        for (std::size_t b = 0; b < num_levels; ++b)
            t.rows[a][b] = static_cast<double>(counts[a][b] + 1) / denom;
    }
    return t;
}

std::vector<double> curate(const std::vector<double>& scores, const NeighborIndex& index,
                           const CurationParams& params) {
    const std::size_t n = scores.size();
    if (index.neighbors.size() != n)
        throw std::invalid_argument("neighbor index does not cover the score set");

    // Negative cosines would act as repulsive weights; clamp them out and fall
    // back to the plain mean when nothing positive remains.
    std::vector<double> neighborhood_mean(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double weighted = 0.0;
        double total = 0.0;
        double plain = 0.0;
        for (const auto& [j, sim] : index.neighbors[i]) {
            const double w = std::max(sim, 0.0);
            weighted += w * scores[static_cast<std::size_t>(j)];
            total += w;
            plain += scores[static_cast<std::size_t>(j)];
        }
        if (total > 0.0)
            neighborhood_mean[i] = weighted / total;
        else if (!index.neighbors[i].empty())
            neighborhood_mean[i] = plain / static_cast<double>(index.neighbors[i].size());
        else
            neighborhood_mean[i] = scores[i];
    }

    std::vector<double> curated(scores);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(scores[i] - neighborhood_mean[i]) <= params.deviation_threshold) continue;
        // The neighborhood is stable when enough of its members sit close to
        // its own consensus; only then is the mean trusted over the item.
        int stable = 0;
        for (const auto& [j, sim] : index.neighbors[i]) {
            (void)sim;
            const auto nj = static_cast<std::size_t>(j);
            if (std::abs(scores[nj] - neighborhood_mean[i]) <= params.deviation_threshold / 2.0)
                ++stable;
        }
        if (stable < params.min_agreement) continue;
        curated[i] = std::round(neighborhood_mean[i] * 2.0) / 2.0;
    }
    return curated;
}

}  // namespace mathforge::curation
