#pragma once

#include <optional>
#include <vector>

#include "mathforge/droplog.hpp"
#include "mathforge/gateway.hpp"
#include "mathforge/types.hpp"

namespace mathforge {

// Which aggregate the threshold applies to: the mean of the three judged
// dimensions (mapped onto 0-5), or the judge's own overall rating.
enum class Aggregate { mean_of_three, overall_field };

const char* to_string(Aggregate a);
Aggregate aggregate_from_string(const std::string& s);

struct FilterConfig {
    double tau = 3.0;  // on the curated 0-5 scale, inclusive
    Aggregate aggregate = Aggregate::mean_of_three;
};

struct ScoredSeed {
    SeedProblem seed;
    ScoreReport report;
    double aggregate_score = 0.0;  // 0-5 scale, per FilterConfig::aggregate
    std::optional<double> curated;
    bool kept = false;
};

// Rates every seed with the judge prompt; items whose replies never parse
// within the retry budget are dropped and logged. Order preserved.
std::vector<ScoredSeed> score_seeds(const std::vector<SeedProblem>& seeds, llm::Gateway& gateway,
                                    const FilterConfig& cfg, DropLog* drops);

// Keeps seeds whose curated score meets or exceeds tau. Marks kept/curated on
// the scored records; output order follows input order.
std::vector<SeedProblem> filter_seeds(std::vector<ScoredSeed>& scored,
                                      const std::vector<double>& curated,
                                      const FilterConfig& cfg);

}  // namespace mathforge
