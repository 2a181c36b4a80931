#include "mathforge/stage2.hpp"

#include <sstream>

#include "mathforge/agent_call.hpp"
#include "mathforge/prompts.hpp"
#include "mathforge/text.hpp"

namespace mathforge {

const char* const kFallbackSuggestion = "Address the rubric dimensions scoring lowest.";

int LoopTrace::reviews() const {
    int n = 0;
    for (const auto& e : events)
        if (e.kind == LoopEvent::Kind::review) ++n;
    return n;
}

int LoopTrace::revisions() const {
    int n = 0;
    for (const auto& e : events)
        if (e.kind == LoopEvent::Kind::revise) ++n;
    return n;
}

std::optional<double> LoopTrace::last_review_mean() const {
    for (auto it = events.rbegin(); it != events.rend(); ++it)
        if (it->kind == LoopEvent::Kind::review) return it->score;
    return std::nullopt;
}

bool trace_within_budget(const LoopTrace& trace, const LoopConfig& cfg) {
    if (trace.reviews() > 1 + cfg.max_iterations) return false;
    if (trace.revisions() > cfg.max_iterations) return false;
    if (trace.outcome == CandidateStatus::accepted) {
        const auto mean = trace.last_review_mean();
        if (!mean || !(*mean > cfg.tau_rev)) return false;
    }
    return true;
}

std::string format_suggestions(const std::vector<std::string>& suggestions) {
    if (suggestions.empty()) return kFallbackSuggestion;
    std::ostringstream os;
    for (std::size_t i = 0; i < suggestions.size(); ++i) {
        if (i) os << '\n';
        os << (i + 1) << ". " << suggestions[i];
    }
    return os.str();
}

std::vector<RephrasedProblem> rephrase_seed(const SeedProblem& seed,
                                            const std::vector<std::string>& variant_ids,
                                            llm::Gateway& gateway, const LoopConfig& cfg,
                                            DropLog* drops) {
    if (static_cast<int>(variant_ids.size()) != cfg.variants_per_seed)
        throw std::invalid_argument("variant_ids must match variants_per_seed");

    std::vector<RephrasedProblem> out;
    for (int v = 0; v < cfg.variants_per_seed; ++v) {
        llm::ChatRequest req;
        req.tag = "rephrase";
        req.user = prompts::render(prompts::Name::rephrase, {{"question", seed.text}});
        req.salt = v * kSaltStride;
        const auto result = call_agent<std::string>(gateway, req, prompts::parse_rephrase);
        if (!result.ok()) {
            if (drops)
                drops->add("stage2", variant_ids[static_cast<std::size_t>(v)],
                           DropReason::rephrase_shortfall,
                           "seed " + seed.id + " variant " + std::to_string(v) + ": " +
                               result.error);
            continue;
        }
        RephrasedProblem candidate;
        candidate.id = variant_ids[static_cast<std::size_t>(v)];
        candidate.parent_id = seed.id;
        candidate.variant_index = v;
        candidate.text = normalize_text(*result.value);
        candidate.status = CandidateStatus::pending;
        out.push_back(std::move(candidate));
    }
    return out;
}

prompts::ParseResult<ReviewVerdict> review_candidate(const RephrasedProblem& candidate,
                                                     llm::Gateway& gateway, int iteration) {
    llm::ChatRequest req;
    req.tag = "review";
    req.user =
        prompts::render(prompts::Name::review, {{"rephrased_question", candidate.text}});
    req.salt = iteration * kSaltStride;
    const auto result = call_agent<ReviewVerdict>(gateway, req, prompts::parse_review);
    if (!result.ok()) return prompts::ParseResult<ReviewVerdict>::failure(result.error);
    return prompts::ParseResult<ReviewVerdict>::success(*result.value);
}

prompts::ParseResult<std::string> revise_candidate(const RephrasedProblem& candidate,
                                                   const ReviewVerdict& verdict,
                                                   llm::Gateway& gateway, int iteration) {
    llm::ChatRequest req;
    req.tag = "revise";
    req.user = prompts::render(prompts::Name::revise,
                               {{"suggestions", format_suggestions(verdict.suggestions)},
                                {"rephrased_question", candidate.text}});
    req.salt = iteration * kSaltStride;
    const auto result = call_agent<prompts::Revision>(gateway, req, prompts::parse_revise);
    if (!result.ok()) return prompts::ParseResult<std::string>::failure(result.error);
    return prompts::ParseResult<std::string>::success(normalize_text(result.value->question));
}

RefineResult refine_candidate(RephrasedProblem candidate, const LoopConfig& cfg,
                              const ReviewFn& review, const ReviseFn& revise) {
    RefineResult result;
    result.trace.candidate_id = candidate.id;

    auto discard = [&](std::string reason) {
        candidate.status = CandidateStatus::discarded;
        result.trace.outcome = CandidateStatus::discarded;
        result.trace.failure_reason = std::move(reason);
        result.candidate = std::move(candidate);
        return result;
    };

    auto first = review(candidate, 0);
    if (!first.ok()) return discard("review failed at iteration 0: " + first.error);
    result.trace.events.push_back({LoopEvent::Kind::review, first.value->mean, 0});
    ReviewVerdict verdict = *first.value;

    for (int iteration = 1; !(verdict.mean > cfg.tau_rev); ++iteration) {
        if (iteration > cfg.max_iterations) {
            candidate.status = CandidateStatus::discarded;
            result.trace.outcome = CandidateStatus::discarded;
            result.candidate = std::move(candidate);
            return result;
        }
        auto revised = revise(candidate, verdict, iteration);
        if (!revised.ok())
            return discard("revise failed at iteration " + std::to_string(iteration) + ": " +
                           revised.error);
        result.trace.events.push_back({LoopEvent::Kind::revise, std::nullopt, iteration});
        candidate.text = *revised.value;
        candidate.revision_count += 1;

        auto reviewed = review(candidate, iteration);
        if (!reviewed.ok())
            return discard("review failed at iteration " + std::to_string(iteration) + ": " +
                           reviewed.error);
        result.trace.events.push_back({LoopEvent::Kind::review, reviewed.value->mean, iteration});
        verdict = *reviewed.value;
    }

    candidate.status = CandidateStatus::accepted;
    result.trace.outcome = CandidateStatus::accepted;
    result.candidate = std::move(candidate);
    return result;
}

RefineResult refine_candidate(const SeedProblem& original, RephrasedProblem candidate,
                              const LoopConfig& cfg, llm::Gateway& gateway, DropLog* drops) {
    (void)original;  // the review rubric judges the candidate text on its own
    auto review = [&gateway](const RephrasedProblem& c, int iteration) {
        return review_candidate(c, gateway, iteration);
    };
    auto revise = [&gateway](const RephrasedProblem& c, const ReviewVerdict& v, int iteration) {
        return revise_candidate(c, v, gateway, iteration);
    };
    RefineResult result = refine_candidate(std::move(candidate), cfg, review, revise);
    if (!result.trace.failure_reason.empty() && drops)
        drops->add("stage2", result.candidate.id, DropReason::agent_failure,
                   result.trace.failure_reason);
    return result;
}

}  // namespace mathforge
