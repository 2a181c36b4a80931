#include <doctest.h>

#include <random>
#include <set>

#include "mathforge/ids.hpp"
#include "mathforge/text.hpp"
#include "mathforge/types.hpp"

using namespace mathforge;

namespace {

// Random strings over a byte alphabet heavy on whitespace.
std::string random_string(std::mt19937_64& rng, std::size_t max_len) {
    static const std::string alphabet =
        "abcdefgh XYZ0123  \t\r\n\f\v!?.,;:#{}[]()\"'\\$%&*+-/<>=_";
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    const std::size_t n = len(rng);
    s.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
    return s;
}

}  // namespace

TEST_CASE("normalize_text collapses whitespace and trims") {
    CHECK(normalize_text("  a  b\r\n") == "a b");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text("   \t\n ") == "");
    CHECK(normalize_text("a\r\nb") == "a b");
    CHECK(normalize_text("one two") == "one two");
}

TEST_CASE("normalize_text is idempotent on random strings") {
    std::mt19937_64 rng(0xA11CE);
    for (int i = 0; i < 1000; ++i) {
        const std::string s = random_string(rng, 120);
        const std::string once = normalize_text(s);
        CHECK(normalize_text(once) == once);
    }
}

TEST_CASE("content_hash ignores whitespace differences and separates content") {
    CHECK(content_hash("a  b\n") == content_hash(" a b"));
    CHECK(content_hash("x") != content_hash("y"));
}

TEST_CASE("content_hash has no collisions over 10k distinct strings") {
    std::set<std::string> inputs;
    std::mt19937_64 rng(0xBEEF);
    while (inputs.size() < 10000)
        inputs.insert("p" + std::to_string(inputs.size()) + ":" + random_string(rng, 60));
    std::set<std::string> hashes;
    std::set<std::string> canon;
    for (const auto& s : inputs) {
        // Only normalization-distinct strings are expected to hash apart.
        if (!canon.insert(normalize_text(s)).second) continue;
        CHECK(hashes.insert(content_hash(s)).second);
    }
    CHECK(hashes.size() >= 9990);
}

TEST_CASE("id allocator format and uniqueness") {
    IdAllocator ids("s1");
    std::set<std::string> seen;
    CHECK(ids.next() == "s1-000001");
    seen.insert("s1-000001");
    for (int i = 0; i < 500; ++i) CHECK(seen.insert(ids.next()).second);
    CHECK(*seen.rbegin() == "s1-000501");
}

TEST_CASE("flavor is derived from source") {
    CHECK(flavor_for(Source::gsm8k) == Flavor::arithmetic_word);
    CHECK(flavor_for(Source::math) == Flavor::competition);
    SeedProblem p{"s1-000001", "q", Source::math};
    CHECK(p.flavor() == Flavor::competition);
}

TEST_CASE("embedding vector normalization and cosine") {
    EmbeddingVector v{{3.0, 4.0}};
    v.normalize();
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-9));
    EmbeddingVector zero{{0.0, 0.0}};
    CHECK_THROWS_AS(zero.normalize(), std::domain_error);
    EmbeddingVector a{{1.0, 0.0}};
    EmbeddingVector b{{0.0, 1.0}};
    CHECK(cosine(a, b) == 0.0);
    EmbeddingVector c{{1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(cosine(a, c), std::invalid_argument);
}

TEST_CASE("verdict mean is the mean of the three dimensions") {
    const ReviewVerdict v = make_verdict(3, 4, 4);
    CHECK(v.mean == doctest::Approx(11.0 / 3.0));
}
