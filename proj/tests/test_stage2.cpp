#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "mathforge/stage2.hpp"
#include "mathforge/text.hpp"

using namespace mathforge;
using namespace mathforge::llm;
using prompts::ParseResult;

namespace {

BackendConfig mock_config(int in_flight = 2) {
    BackendConfig cfg;
    cfg.mode = BackendMode::mock;
    cfg.retry.base_backoff = std::chrono::milliseconds(1);
    cfg.max_in_flight = in_flight;
    cfg.embed_dim = 32;
    return cfg;
}

SeedProblem seed() {
    return {"s1-000001", "Ivory got four more riddles than Josh did.", Source::gsm8k};
}

std::vector<std::string> ids(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("s2-" + std::to_string(i + 1));
    return out;
}

RephrasedProblem candidate(const std::string& text = "What is 6 times 4?") {
    RephrasedProblem c;
    c.id = "s2-1";
    c.parent_id = "s1-000001";
    c.variant_index = 0;
    c.text = text;
    return c;
}

// Scripted reviewer: verdict means consumed in order; never fails.
ReviewFn scripted_reviews(std::vector<ReviewVerdict> verdicts) {
    auto state = std::make_shared<std::pair<std::vector<ReviewVerdict>, std::size_t>>(
        std::move(verdicts), 0);
    return [state](const RephrasedProblem&, int) {
        REQUIRE(state->second < state->first.size());
        return ParseResult<ReviewVerdict>::success(state->first[state->second++]);
    };
}

ReviseFn echo_revise() {
    return [](const RephrasedProblem& c, const ReviewVerdict&, int iteration) {
        return ParseResult<std::string>::success(c.text + " (rev " +
                                                 std::to_string(iteration) + ")");
    };
}

ReviewVerdict verdict_with_mean(double mean) {
    ReviewVerdict v = make_verdict(4, 4, 4);
    v.mean = mean;  // probe value; grammar-parsed verdicts always have mean = dim mean
    return v;
}

}  // namespace

TEST_CASE("rephrase yields one candidate per variant with indices 0..5") {
    LoopConfig cfg;
    Gateway gateway(mock_config());
    const auto candidates = rephrase_seed(seed(), ids(6), gateway, cfg, nullptr);
    REQUIRE(candidates.size() == 6);
    for (int v = 0; v < 6; ++v) {
        CHECK(candidates[static_cast<std::size_t>(v)].variant_index == v);
        CHECK(candidates[static_cast<std::size_t>(v)].parent_id == "s1-000001");
        CHECK_FALSE(candidates[static_cast<std::size_t>(v)].text.empty());
        CHECK(candidates[static_cast<std::size_t>(v)].revision_count == 0);
    }
    // Independent completions: salts differ, so variants differ.
    CHECK(candidates[0].text != candidates[1].text);
}

TEST_CASE("variants_per_seed=1 yields a single candidate") {
    LoopConfig cfg;
    cfg.variants_per_seed = 1;
    Gateway gateway(mock_config());
    CHECK(rephrase_seed(seed(), ids(1), gateway, cfg, nullptr).size() == 1);
}

TEST_CASE("all-malformed rephrase completions log one shortfall per variant") {
    auto backend = std::make_unique<MockBackend>(32);
    for (int i = 0; i < 18; ++i) backend->script("rephrase", "no marker in this reply");
    Gateway gateway(mock_config(1), std::move(backend));
    DropLog drops;
    LoopConfig cfg;
    const auto candidates = rephrase_seed(seed(), ids(6), gateway, cfg, &drops);
    CHECK(candidates.empty());
    CHECK(drops.count() == 6);
    for (const auto& e : drops.entries()) CHECK(e.reason == DropReason::rephrase_shortfall);
}

TEST_CASE("review parses the worked fixture scores through the gateway") {
    auto backend = std::make_unique<MockBackend>(32);
    backend->script("review",
                    "###thought###\nok\n###rating_score###\n[\"3\", \"4\", \"4\"]\n"
                    "###suggestions###\n###Specific improvement 1###\nA\n"
                    "###Specific improvement 2###\nB\n###Specific improvement 3###\nC\n");
    Gateway gateway(mock_config(), std::move(backend));
    const auto verdict = review_candidate(candidate(), gateway, 0);
    REQUIRE(verdict.ok());
    CHECK(verdict->mean == doctest::Approx(11.0 / 3.0));
    CHECK(verdict->suggestions.size() == 3);
}

TEST_CASE("revise renders numbered suggestions and increments revision count") {
    auto backend = std::make_unique<MockBackend>(32);
    auto seen_prompt = std::make_shared<std::string>();
    backend->set_handler("revise", [seen_prompt](const ChatRequest& req) {
        *seen_prompt = req.user;
        return std::string("###revised_question###\nBetter question.\n"
                           "###revision_notes###\nnotes");
    });
    Gateway gateway(mock_config(), std::move(backend));

    ReviewVerdict verdict = make_verdict(3, 4, 4);
    verdict.suggestions = {"first fix", "second fix"};
    const auto revised = revise_candidate(candidate(), verdict, gateway, 1);
    REQUIRE(revised.ok());
    CHECK(*revised.value == "Better question.");
    CHECK(seen_prompt->find("1. first fix\n2. second fix") != std::string::npos);
    CHECK(seen_prompt->find("original question: What is 6 times 4?") != std::string::npos);
}

TEST_CASE("empty suggestions fall back to the generic rubric note") {
    CHECK(format_suggestions({}) == kFallbackSuggestion);
    CHECK(format_suggestions({"only one"}) == "1. only one");
}

TEST_CASE("a scripted revise reply reproduces the fixture's revised problem") {
    std::ifstream in(std::string(TEST_DATA_DIR) + "/revise_fixture_1.txt", std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();

    auto backend = std::make_unique<MockBackend>(32);
    backend->script("revise", os.str());
    Gateway gateway(mock_config(), std::move(backend));

    ReviewVerdict verdict = make_verdict(3, 4, 4);
    verdict.suggestions = {"Clarify the influence of Josh giving away his riddles."};
    const auto revised = revise_candidate(candidate(), verdict, gateway, 1);
    REQUIRE(revised.ok());
    CHECK(revised.value->rfind("Josh is participating in a school riddle competition.", 0) == 0);
    CHECK(revised.value->find("How many riddles does Taso have?") != std::string::npos);
}

TEST_CASE("immediate pass: one review, no revisions") {
    const auto result = refine_candidate(candidate(), {}, scripted_reviews({verdict_with_mean(4.8)}),
                                         echo_revise());
    CHECK(result.candidate.status == CandidateStatus::accepted);
    CHECK(result.trace.outcome == CandidateStatus::accepted);
    CHECK(result.trace.reviews() == 1);
    CHECK(result.trace.revisions() == 0);
    CHECK(result.candidate.revision_count == 0);
}

TEST_CASE("accepted after one revision") {
    const auto result = refine_candidate(
        candidate(), {}, scripted_reviews({verdict_with_mean(4.0), verdict_with_mean(4.7)}),
        echo_revise());
    CHECK(result.candidate.status == CandidateStatus::accepted);
    CHECK(result.trace.reviews() == 2);
    CHECK(result.trace.revisions() == 1);
    CHECK(result.candidate.revision_count == 1);
    CHECK(result.candidate.text.find("(rev 1)") != std::string::npos);
    REQUIRE(result.trace.events.size() == 3);
    CHECK(result.trace.events[0].score == doctest::Approx(4.0));
    CHECK(result.trace.events[2].score == doctest::Approx(4.7));
}

TEST_CASE("persistent failure exhausts the loop: four reviews, three revisions") {
    const auto result = refine_candidate(
        candidate(), {},
        scripted_reviews({verdict_with_mean(3.0), verdict_with_mean(3.2),
                          verdict_with_mean(3.4), verdict_with_mean(3.9)}),
        echo_revise());
    CHECK(result.candidate.status == CandidateStatus::discarded);
    CHECK(result.trace.reviews() == 4);
    CHECK(result.trace.revisions() == 3);
    CHECK(result.trace.failure_reason.empty());
}

TEST_CASE("a review mean of exactly tau_rev is not accepted") {
    // 4.5 exactly: must flow into the loop, and if it never improves, discard.
    const auto result = refine_candidate(
        candidate(), {},
        scripted_reviews({verdict_with_mean(4.5), verdict_with_mean(4.5),
                          verdict_with_mean(4.5), verdict_with_mean(4.5)}),
        echo_revise());
    CHECK(result.candidate.status == CandidateStatus::discarded);
    CHECK(result.trace.reviews() == 4);

    const auto barely = refine_candidate(
        candidate(), {},
        scripted_reviews({verdict_with_mean(4.5), verdict_with_mean(4.5000001)}),
        echo_revise());
    CHECK(barely.candidate.status == CandidateStatus::accepted);
}

TEST_CASE("agent failure inside the loop discards with the location recorded") {
    int calls = 0;
    ReviewFn flaky = [&calls](const RephrasedProblem&, int) {
        if (++calls == 1)
            return ParseResult<ReviewVerdict>::success(make_verdict(3, 3, 3));
        return ParseResult<ReviewVerdict>::failure("malformed review");
    };
    const auto result = refine_candidate(candidate(), {}, flaky, echo_revise());
    CHECK(result.candidate.status == CandidateStatus::discarded);
    CHECK(result.trace.failure_reason.find("iteration 1") != std::string::npos);

    ReviseFn broken = [](const RephrasedProblem&, const ReviewVerdict&, int) {
        return ParseResult<std::string>::failure("malformed revision");
    };
    const auto result2 =
        refine_candidate(candidate(), {}, scripted_reviews({verdict_with_mean(2.0)}), broken);
    CHECK(result2.candidate.status == CandidateStatus::discarded);
    CHECK(result2.trace.failure_reason.find("revise failed") != std::string::npos);
}

TEST_CASE("max_iterations=0 discards any sub-threshold candidate without revising") {
    LoopConfig cfg;
    cfg.max_iterations = 0;
    const auto result =
        refine_candidate(candidate(), cfg, scripted_reviews({verdict_with_mean(4.4)}),
                         echo_revise());
    CHECK(result.candidate.status == CandidateStatus::discarded);
    CHECK(result.trace.reviews() == 1);
    CHECK(result.trace.revisions() == 0);
}

TEST_CASE("budget and soundness hold over randomized trajectories") {
    std::mt19937_64 rng(0x600D);
    std::uniform_int_distribution<int> dim(1, 5);
    LoopConfig cfg;
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<ReviewVerdict> verdicts;
        for (int r = 0; r < 4; ++r) verdicts.push_back(make_verdict(dim(rng), dim(rng), dim(rng)));
        const auto result =
            refine_candidate(candidate(), cfg, scripted_reviews(verdicts), echo_revise());
        CHECK(trace_within_budget(result.trace, cfg));
        const bool accepted = result.candidate.status == CandidateStatus::accepted;
        const auto last = result.trace.last_review_mean();
        REQUIRE(last.has_value());
        CHECK(accepted == (*last > cfg.tau_rev));
        CHECK(result.trace.revisions() == result.candidate.revision_count);
    }
}

TEST_CASE("gateway-backed refine runs end to end against the mock") {
    Gateway gateway(mock_config());
    DropLog drops;
    LoopConfig cfg;
    const auto result = refine_candidate(seed(), candidate(), cfg, gateway, &drops);
    CHECK((result.candidate.status == CandidateStatus::accepted ||
           result.candidate.status == CandidateStatus::discarded));
    CHECK(trace_within_budget(result.trace, cfg));
    CHECK(drops.count() == 0);

    // Determinism: the same loop re-run produces the identical trace.
    const auto again = refine_candidate(seed(), candidate(), cfg, gateway, nullptr);
    CHECK(again.candidate.text == result.candidate.text);
    CHECK(again.trace.events.size() == result.trace.events.size());
    for (std::size_t i = 0; i < again.trace.events.size(); ++i) {
        CHECK(again.trace.events[i].kind == result.trace.events[i].kind);
        CHECK(again.trace.events[i].score == result.trace.events[i].score);
    }
}
