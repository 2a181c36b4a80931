#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mathforge/droplog.hpp"
#include "mathforge/gateway.hpp"
#include "mathforge/parsers.hpp"
#include "mathforge/types.hpp"

namespace mathforge {

struct LoopConfig {
    int variants_per_seed = 6;
    double tau_rev = 4.5;    // acceptance is strictly above this
    int max_iterations = 3;  // revise-review rounds after the first review
};

struct LoopEvent {
    enum class Kind { review, revise };
    Kind kind = Kind::review;
    std::optional<double> score;  // review mean; revise events carry none
    int iteration = 0;
};

struct LoopTrace {
    std::string candidate_id;
    std::vector<LoopEvent> events;
    CandidateStatus outcome = CandidateStatus::pending;
    std::string failure_reason;  // set when an agent failure cut the loop short

    int reviews() const;
    int revisions() const;
    std::optional<double> last_review_mean() const;
};

// Budget and soundness checks every trace must satisfy.
bool trace_within_budget(const LoopTrace& trace, const LoopConfig& cfg);

// Slot content for the revise prompt when a sub-threshold review offered no
// concrete suggestions.
extern const char* const kFallbackSuggestion;

// Numbered list for the revise prompt's suggestions slot.
std::string format_suggestions(const std::vector<std::string>& suggestions);

// Expands one seed into cfg.variants_per_seed candidates via independent
// completions. variant_ids supplies the pre-assigned candidate ids. Parse
// failures re-sample within the retry budget; unrecoverable variants are
// logged as shortfalls, so fewer candidates may return.
std::vector<RephrasedProblem> rephrase_seed(const SeedProblem& seed,
                                            const std::vector<std::string>& variant_ids,
                                            llm::Gateway& gateway, const LoopConfig& cfg,
                                            DropLog* drops);

prompts::ParseResult<ReviewVerdict> review_candidate(const RephrasedProblem& candidate,
                                                     llm::Gateway& gateway, int iteration);

// Returns the revised question text.
prompts::ParseResult<std::string> revise_candidate(const RephrasedProblem& candidate,
                                                   const ReviewVerdict& verdict,
                                                   llm::Gateway& gateway, int iteration);

using ReviewFn =
    std::function<prompts::ParseResult<ReviewVerdict>(const RephrasedProblem&, int iteration)>;
using ReviseFn = std::function<prompts::ParseResult<std::string>(
    const RephrasedProblem&, const ReviewVerdict&, int iteration)>;

struct RefineResult {
    RephrasedProblem candidate;  // final text and status
    LoopTrace trace;
};

// The review-revise loop: review; accept when the mean is strictly above
// tau_rev; otherwise revise and re-review, up to max_iterations rounds, with
// early stop on the first passing review. Agent failures discard the
// candidate with the trace recording where.
RefineResult refine_candidate(RephrasedProblem candidate, const LoopConfig& cfg,
                              const ReviewFn& review, const ReviseFn& revise);

// Gateway-backed wiring of the loop. `original` is the governing seed; each
// round re-reviews the candidate's current text on its own merits.
RefineResult refine_candidate(const SeedProblem& original, RephrasedProblem candidate,
                              const LoopConfig& cfg, llm::Gateway& gateway, DropLog* drops);

}  // namespace mathforge
