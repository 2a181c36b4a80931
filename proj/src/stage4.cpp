#include "mathforge/stage4.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mathforge/agent_call.hpp"
#include "mathforge/parsers.hpp"
#include "mathforge/prompts.hpp"

namespace mathforge {

std::vector<std::optional<PairScore>> score_pairs(const std::vector<PairCandidate>& pairs,
                                                  llm::Gateway& gateway, DropLog* drops) {
    std::vector<std::optional<PairScore>> out(pairs.size());
    const auto workers = static_cast<std::size_t>(gateway.config().max_in_flight);
    llm::parallel_for_index(pairs.size(), workers, [&](std::size_t i) {
        llm::ChatRequest req;
        req.tag = "pair_rating";
        req.user = prompts::render(prompts::Name::pair_rating,
                                   {{"question", pairs[i].question},
                                    {"solution", pairs[i].solution}});
        req.salt = static_cast<int>(i) * kSaltStride;
        const auto result =
            call_agent<prompts::PairRating>(gateway, req, prompts::parse_pair_rating);
        if (!result.ok()) {
            if (drops)
                drops->add("stage4", pairs[i].pair_id, DropReason::parse_failure, result.error);
            return;
        }
        PairScore score;
        score.clarity = result.value->clarity;
        score.correctness = result.value->correctness;
        score.completeness = result.value->completeness;
        score.mean = (score.clarity + score.correctness + score.completeness) / 3.0;
        score.curated = score.mean;  // until curation runs
        out[i] = score;
    });
    return out;
}

int score_level(double curated, double level_granularity) {
    if (level_granularity <= 0.0)
        throw std::invalid_argument("level_granularity must be positive");
    return static_cast<int>(std::floor(curated / level_granularity + 1e-9));
}

std::vector<std::size_t> select_diverse(const std::vector<SelectionItem>& items,
                                        std::size_t target_count) {
    const std::size_t budget = std::min(target_count, items.size());
    std::vector<std::size_t> selected;
    if (budget == 0) return selected;
    selected.reserve(budget);

    std::map<int, std::vector<std::size_t>, std::greater<>> by_level;
    for (std::size_t i = 0; i < items.size(); ++i) by_level[items[i].level].push_back(i);

    for (auto& [level, members] : by_level) {
        (void)level;
        if (selected.size() == budget) break;

        // Max cosine to the selected set, maintained incrementally in
        // selection order so replays recompute the identical doubles.
        std::vector<double> max_cos(items.size(),
                                    -std::numeric_limits<double>::infinity());
        for (std::size_t m : members)
            for (std::size_t s : selected)
                max_cos[m] = std::max(max_cos[m], cosine(items[m].embedding, items[s].embedding));

        std::vector<bool> taken(items.size(), false);
        std::size_t remaining = members.size();
        while (remaining > 0 && selected.size() < budget) {
            std::size_t best = items.size();
            if (selected.empty()) {
                // Nothing picked anywhere yet: the most central-free item,
                // i.e. lowest mean pairwise cosine within this level.
                double best_mean = 0.0;
                for (std::size_t m : members) {
                    if (taken[m]) continue;
                    double sum = 0.0;
                    for (std::size_t o : members) {
                        if (o == m) continue;
                        sum += cosine(items[m].embedding, items[o].embedding);
                    }
                    const double mean =
                        members.size() > 1 ? sum / static_cast<double>(members.size() - 1) : 0.0;
                    if (best == items.size() || mean < best_mean ||
                        (mean == best_mean && items[m].pair_id < items[best].pair_id)) {
                        best = m;
                        best_mean = mean;
                    }
                }
            } else {
                // Farthest from the selected set: smallest max cosine.
                double best_cos = 0.0;
                for (std::size_t m : members) {
                    if (taken[m]) continue;
                    if (best == items.size() || max_cos[m] < best_cos ||
                        (max_cos[m] == best_cos && items[m].pair_id < items[best].pair_id)) {
                        best = m;
                        best_cos = max_cos[m];
                    }
                }
            }
            taken[best] = true;
            --remaining;
            selected.push_back(best);
            for (std::size_t m : members) {
                if (taken[m]) continue;
                max_cos[m] =
                    std::max(max_cos[m], cosine(items[m].embedding, items[best].embedding));
            }
        }
    }
    return selected;
}

}  // namespace mathforge
