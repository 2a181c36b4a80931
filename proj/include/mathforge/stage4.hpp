#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mathforge/droplog.hpp"
#include "mathforge/gateway.hpp"
#include "mathforge/types.hpp"

namespace mathforge {

struct PairScore {
    int clarity = 0;
    int correctness = 0;
    int completeness = 0;
    double mean = 0.0;     // arithmetic mean of the three dimensions
    double curated = 0.0;  // after neighborhood-consistency correction
};

struct SelectionConfig {
    int target_count = 15000;
    double level_granularity = 0.5;  // width of one quality level
};

struct PairCandidate {
    std::string pair_id;
    std::string question_id;
    int sample_index = 0;
    std::string question;
    std::string solution;
};

// Judges each problem-solution pair on clarity / correctness / completeness.
// Slot i is nullopt when the pair was dropped after the retry budget.
std::vector<std::optional<PairScore>> score_pairs(const std::vector<PairCandidate>& pairs,
                                                  llm::Gateway& gateway, DropLog* drops);

// Quality level a curated score falls into.
int score_level(double curated, double level_granularity);

struct SelectionItem {
    std::string pair_id;
    int level = 0;
    EmbeddingVector embedding;
};

// Ranking-based diverse selection: levels are exhausted from highest to
// lowest; within a level the next pick maximizes its minimum cosine distance
// to everything already selected (the very first pick overall is the item
// with the lowest mean pairwise cosine inside its level). Ties go to the
// lower pair id. Returns indices into `items` in selection order, exactly
// min(target_count, items.size()) of them.
std::vector<std::size_t> select_diverse(const std::vector<SelectionItem>& items,
                                        std::size_t target_count);

}  // namespace mathforge
