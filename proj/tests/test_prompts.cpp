#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "mathforge/parsers.hpp"
#include "mathforge/prompts.hpp"

using namespace mathforge;
using namespace mathforge::prompts;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: " << path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string fixture(const std::string& name) {
    return read_file(std::string(TEST_DATA_DIR) + "/" + name);
}

}  // namespace

TEST_CASE("templates byte-match their shipped data files") {
    for (const auto& t : all()) {
        const std::string file =
            read_file(std::string(PROMPTS_DIR) + "/" + to_string(t.name) + ".txt");
        CHECK_MESSAGE(file == std::string(t.body), "template drift: " << to_string(t.name));
    }
}

TEST_CASE("render substitutes slots and keeps the rubric text") {
    const std::string rating = render(Name::rating, {{"question", "What is 2+2?"}});
    CHECK(rating.find("Complexity (1--10)") != std::string::npos);
    CHECK(rating.find("What is 2+2?") != std::string::npos);
    CHECK(rating.find("{question}") == std::string::npos);

    const std::string review = render(Name::review, {{"rephrased_question", "Q"}});
    CHECK(review.find("###rating_score###") != std::string::npos);
    CHECK(review.find("Rephrased question: Q") != std::string::npos);

    // Literal JSON braces in the rating template survive rendering.
    CHECK(rating.find("\"Overall rating\": <number, 1--10>") != std::string::npos);
}

TEST_CASE("render fails naming the missing slot") {
    try {
        render(Name::review, {{"question", "wrong slot"}});
        FAIL("expected PromptError");
    } catch (const PromptError& e) {
        CHECK(std::string(e.what()).find("rephrased_question") != std::string::npos);
    }
}

TEST_CASE("render does not rescan substituted values") {
    const std::string out = render(
        Name::revise, {{"suggestions", "use {rephrased_question} verbatim"},
                       {"rephrased_question", "Q"}});
    CHECK(out.find("use {rephrased_question} verbatim") != std::string::npos);
}

TEST_CASE("parse_rating reads the four keys and normalizes the overall") {
    const auto r = parse_rating(
        R"({"Complexity": 7, "Information Value": 8, "Clarity": 9, "Overall rating": 8})");
    REQUIRE(r.ok());
    CHECK(r->complexity == 7);
    CHECK(r->info_value == 8);
    CHECK(r->clarity == 9);
    CHECK(r->overall_raw == 8);
    CHECK(r->overall_norm == doctest::Approx(4.0));
    CHECK(r->mean_of_three() == doctest::Approx(8.0));
}

TEST_CASE("parse_rating tolerates fences and prose") {
    const std::string text =
        "Here is my assessment.\n```json\n{\"Complexity\": 7, \"Information Value\": 8, "
        "\"Clarity\": 9, \"Overall rating\": 8}\n```\nLet me know.";
    const auto r = parse_rating(text);
    REQUIRE(r.ok());
    CHECK(r->overall_raw == 8);
}

TEST_CASE("parse_rating rejects out-of-scale and missing keys") {
    const auto high = parse_rating(
        R"({"Complexity": 12, "Information Value": 8, "Clarity": 9, "Overall rating": 8})");
    CHECK_FALSE(high.ok());
    CHECK(high.error.find("12") != std::string::npos);

    const auto missing =
        parse_rating(R"({"Complexity": 7, "Information Value": 8, "Clarity": 9})");
    CHECK_FALSE(missing.ok());

    CHECK_FALSE(parse_rating("no json here").ok());
    const auto fractional = parse_rating(
        R"({"Complexity": 7.5, "Information Value": 8, "Clarity": 9, "Overall rating": 8})");
    CHECK_FALSE(fractional.ok());
}

TEST_CASE("parse_rephrase keeps only the final rewritten question") {
    const auto r = parse_rephrase(fixture("rephrase_fixture_1.txt"));
    REQUIRE(r.ok());
    CHECK(r.value->rfind("Josh is participating", 0) == 0);
    CHECK(r.value->find("Stage 2") == std::string::npos);
    CHECK(r.value->find("#Finally") == std::string::npos);
}

TEST_CASE("parse_rephrase takes the last marker occurrence") {
    const std::string text =
        "#Finally Rewritten question#: draft one\nmore analysis\n"
        "#Finally Rewritten question#: the real question";
    const auto r = parse_rephrase(text);
    REQUIRE(r.ok());
    CHECK(*r.value == "the real question");
}

TEST_CASE("parse_rephrase errors without the marker or with empty text") {
    CHECK_FALSE(parse_rephrase("Stage 3 is missing entirely").ok());
    CHECK_FALSE(parse_rephrase("#Finally Rewritten question#:   \n ").ok());
}

TEST_CASE("worked review fixtures parse to their printed scores") {
    struct Expected {
        const char* file;
        int a, b, c;
        std::size_t suggestions;
    };
    const Expected cases[] = {
        {"review_fixture_1.txt", 3, 4, 4, 3},
        {"review_fixture_2.txt", 4, 4, 4, 3},
        {"review_fixture_3.txt", 3, 4, 3, 3},
        {"review_fixture_4.txt", 3, 4, 3, 2},
        {"review_fixture_5.txt", 4, 4, 3, 3},
    };
    for (const auto& expected : cases) {
        CAPTURE(expected.file);
        const auto r = parse_review(fixture(expected.file));
        REQUIRE(r.ok());
        CHECK(r->clarity_grammar == expected.a);
        CHECK(r->logic_completeness == expected.b);
        CHECK(r->validity_solvability == expected.c);
        CHECK(r->suggestions.size() == expected.suggestions);
        CHECK(r->mean ==
              doctest::Approx((expected.a + expected.b + expected.c) / 3.0));
        CHECK_FALSE(r->thought.empty());
    }
    const auto first = parse_review(fixture("review_fixture_1.txt"));
    CHECK(first->mean == doctest::Approx(3.667).epsilon(1e-3));
}

TEST_CASE("parse_review edge cases") {
    const auto perfect = parse_review(
        "###thought###\nfine\n###rating_score###\n[\"5\", \"5\", \"5\"]\n###suggestions###\n");
    REQUIRE(perfect.ok());
    CHECK(perfect->mean == doctest::Approx(5.0));
    CHECK(perfect->suggestions.empty());

    const auto arity =
        parse_review("###thought###\nx\n###rating_score###\n[\"3\", \"4\"]");
    CHECK_FALSE(arity.ok());
    CHECK(arity.error.find("3") != std::string::npos);

    const auto range =
        parse_review("###thought###\nx\n###rating_score###\n[\"3\", \"4\", \"9\"]");
    CHECK_FALSE(range.ok());

    const auto bare = parse_review("###rating_score### [3,4,4]");
    REQUIRE(bare.ok());
    CHECK(bare->clarity_grammar == 3);

    CHECK_FALSE(parse_review("###rating_score### [\"3\", \"4.5\", \"4\"]").ok());
    CHECK_FALSE(parse_review("no markers at all").ok());
}

TEST_CASE("parse_revise extracts question and optional notes") {
    const auto r = parse_revise(fixture("revise_fixture_1.txt"));
    REQUIRE(r.ok());
    CHECK(r->question.rfind("Josh is participating", 0) == 0);
    CHECK(r->question.find("###") == std::string::npos);
    CHECK(r->notes.rfind("Made Taso's independence", 0) == 0);

    const auto no_notes = parse_revise("###revised_question###\nA question only.");
    REQUIRE(no_notes.ok());
    CHECK(no_notes->question == "A question only.");
    CHECK(no_notes->notes.empty());

    CHECK_FALSE(parse_revise("###revision_notes###\nonly notes").ok());
    CHECK_FALSE(parse_revise("###revised_question###\n   \n###revision_notes###\nx").ok());
}

TEST_CASE("parse_solution extracts thought and one-line answer") {
    const auto arith = parse_solution(fixture("solution_fixture_arith.txt"));
    REQUIRE(arith.ok());
    CHECK(arith->answer == "30");
    CHECK(arith->thought.rfind("To correctly calculate", 0) == 0);

    const auto comp = parse_solution(fixture("solution_fixture_comp.txt"));
    REQUIRE(comp.ok());
    CHECK(comp->answer == "\\(\\dfrac{2}{11}\\)");

    CHECK_FALSE(parse_solution("###thought### reasoning but no answer marker").ok());
    CHECK_FALSE(parse_solution("###answer### 42").ok());
    CHECK_FALSE(parse_solution("###thought### x ###answer###   \n").ok());
}

TEST_CASE("parse_pair_rating reads the 1-5 scale") {
    const auto r = parse_pair_rating(
        R"({"Clarity": 5, "Correctness": 4, "Completeness": 3, "Overall rating": 4})");
    REQUIRE(r.ok());
    CHECK(r->clarity == 5);
    CHECK(r->correctness == 4);
    CHECK(r->completeness == 3);
    CHECK_FALSE(parse_pair_rating(
                    R"({"Clarity": 6, "Correctness": 4, "Completeness": 3, "Overall rating": 4})")
                    .ok());
}

TEST_CASE("review round-trip: synthesized responses reconstruct their values") {
    std::mt19937_64 rng(0x5EED);
    std::uniform_int_distribution<int> score(1, 5);
    std::uniform_int_distribution<int> count(0, 4);
    for (int iter = 0; iter < 100; ++iter) {
        const int a = score(rng);
        const int b = score(rng);
        const int c = score(rng);
        const int suggestions = count(rng);
        std::ostringstream os;
        os << "###thought###\nthought " << iter << "\n###rating_score###\n[\"" << a << "\", \""
           << b << "\", \"" << c << "\"]\n###suggestions###\n";
        for (int s = 0; s < suggestions; ++s)
            os << "###Specific improvement " << (s + 1) << "###\nsuggestion body " << s << "\n";
        const auto parsed = parse_review(os.str());
        REQUIRE(parsed.ok());
        CHECK(parsed->clarity_grammar == a);
        CHECK(parsed->logic_completeness == b);
        CHECK(parsed->validity_solvability == c);
        CHECK(parsed->suggestions.size() == static_cast<std::size_t>(suggestions));
        for (int s = 0; s < suggestions; ++s)
            CHECK(parsed->suggestions[static_cast<std::size_t>(s)] ==
                  "suggestion body " + std::to_string(s));
    }
}

TEST_CASE("parsers never throw on random bytes (smoke: the acceptance fuzz is larger)") {
    std::mt19937_64 rng(0xF022);
    std::uniform_int_distribution<int> len(0, 300);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int iter = 0; iter < 2000; ++iter) {
        std::string s;
        const int n = len(rng);
        s.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) s.push_back(static_cast<char>(byte(rng)));
        CHECK_NOTHROW((void)parse_rating(s));
        CHECK_NOTHROW((void)parse_rephrase(s));
        CHECK_NOTHROW((void)parse_review(s));
        CHECK_NOTHROW((void)parse_revise(s));
        CHECK_NOTHROW((void)parse_solution(s));
        CHECK_NOTHROW((void)parse_pair_rating(s));
    }
}
