#pragma once

#include <string>
#include <vector>

#include "mathforge/droplog.hpp"
#include "mathforge/gateway.hpp"
#include "mathforge/parsers.hpp"
#include "mathforge/types.hpp"

namespace mathforge {

struct SolveTask {
    std::string question_id;
    std::string text;
    Flavor flavor = Flavor::arithmetic_word;  // picks the one-shot exemplar
};

// One chain-of-thought completion for the question. sample_index feeds the
// request salt, so multiple samples of the same question are distinct
// completions (and distinct recordings).
prompts::ParseResult<SolutionRecord> solve_question(const SolveTask& task, int sample_index,
                                                    llm::Gateway& gateway);

struct SolveReport {
    std::vector<SolutionRecord> records;  // sorted by (question_id, sample_index)
    std::size_t failures = 0;
};

// samples_per_question completions per task; failures are independent per
// (question, sample) and logged.
SolveReport solve_corpus(const std::vector<SolveTask>& tasks, llm::Gateway& gateway,
                         int samples_per_question, DropLog* drops);

}  // namespace mathforge
