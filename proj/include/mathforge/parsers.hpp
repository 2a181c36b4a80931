#pragma once

#include <optional>
#include <string>
#include <utility>

#include "mathforge/types.hpp"

namespace mathforge::prompts {

// Agent responses are untrusted text; parsers return a structured error
// instead of throwing so callers can spend their retry budget.
template <typename T>
struct ParseResult {
    std::optional<T> value;
    std::string error;

    bool ok() const { return value.has_value(); }
    const T& operator*() const { return *value; }
    const T* operator->() const { return &*value; }

    static ParseResult success(T v) { return {std::move(v), {}}; }
    static ParseResult failure(std::string err) { return {std::nullopt, std::move(err)}; }
};

struct Revision {
    std::string question;
    std::string notes;
};

struct PairRating {
    int clarity = 0;
    int correctness = 0;
    int completeness = 0;
    int overall_raw = 0;
};

// Rating-agent reply: a JSON object with Complexity / Information Value /
// Clarity / Overall rating on the 1-10 scale, possibly wrapped in prose or a
// fenced code block. overall_norm is overall_raw/2 (0-5 scale).
ParseResult<ScoreReport> parse_rating(const std::string& text);

// Rephrase-agent reply: the question text after the last
// "#Finally Rewritten question#" marker; earlier analysis stages are dropped.
ParseResult<std::string> parse_rephrase(const std::string& text);

// Review-agent reply: ###thought### / ###rating_score### (three integers,
// 1-5) / optional ###suggestions### blocks.
ParseResult<ReviewVerdict> parse_review(const std::string& text);

// Revise-agent reply: ###revised_question### required, ###revision_notes###
// optional (empty string when absent).
ParseResult<Revision> parse_revise(const std::string& text);

// Solver reply: ###thought### ... ###answer### <one-line answer>. The
// returned record has question_id and sample_index left for the caller.
ParseResult<SolutionRecord> parse_solution(const std::string& text);

// Pair-rating reply: JSON with Clarity / Correctness / Completeness /
// Overall rating on the 1-5 scale.
ParseResult<PairRating> parse_pair_rating(const std::string& text);

// Strips the same whitespace class normalize_text collapses, from both ends.
std::string trim(const std::string& s);

}  // namespace mathforge::prompts
