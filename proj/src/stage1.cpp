#include "mathforge/stage1.hpp"

#include <stdexcept>

#include "mathforge/agent_call.hpp"
#include "mathforge/prompts.hpp"

namespace mathforge {

const char* to_string(Aggregate a) {
    return a == Aggregate::mean_of_three ? "mean_of_three" : "overall_field";
}

Aggregate aggregate_from_string(const std::string& s) {
    if (s == "mean_of_three") return Aggregate::mean_of_three;
    if (s == "overall_field") return Aggregate::overall_field;
    throw std::invalid_argument("unknown aggregate: " + s);
}

std::vector<ScoredSeed> score_seeds(const std::vector<SeedProblem>& seeds, llm::Gateway& gateway,
                                    const FilterConfig& cfg, DropLog* drops) {
    if (seeds.empty()) throw std::invalid_argument("no seeds to score");

    std::vector<std::optional<ScoredSeed>> slots(seeds.size());
    const auto workers = static_cast<std::size_t>(gateway.config().max_in_flight);
    llm::parallel_for_index(seeds.size(), workers, [&](std::size_t i) {
        llm::ChatRequest req;
        req.tag = "rating";
        req.user = prompts::render(prompts::Name::rating, {{"question", seeds[i].text}});
        req.salt = static_cast<int>(i) * kSaltStride;
        const auto result =
            call_agent<ScoreReport>(gateway, req, prompts::parse_rating);
        if (!result.ok()) {
            if (drops)
                drops->add("stage1", seeds[i].id, DropReason::parse_failure,
                           result.error + " (after " + std::to_string(result.attempts) +
                               " attempts)");
            return;
        }
        ScoredSeed scored;
        scored.seed = seeds[i];
        scored.report = *result.value;
        scored.aggregate_score = cfg.aggregate == Aggregate::mean_of_three
                                     ? scored.report.mean_of_three() / 2.0
                                     : scored.report.overall_norm;
        slots[i] = std::move(scored);
    });

    std::vector<ScoredSeed> out;
    out.reserve(seeds.size());
    for (auto& slot : slots)
        if (slot) out.push_back(std::move(*slot));
    return out;
}

std::vector<SeedProblem> filter_seeds(std::vector<ScoredSeed>& scored,
                                      const std::vector<double>& curated,
                                      const FilterConfig& cfg) {
    if (curated.size() != scored.size())
        throw std::invalid_argument("curated scores are not aligned with the scored seeds");

    std::vector<SeedProblem> kept;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        scored[i].curated = curated[i];
        scored[i].report.curated = curated[i];
        scored[i].kept = curated[i] >= cfg.tau;  // "meets or exceeds"
        if (scored[i].kept) kept.push_back(scored[i].seed);
    }
    return kept;
}

}  // namespace mathforge
