#include "mathforge/parsers.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>

namespace mathforge::prompts {

using nlohmann::json;

namespace {

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

// Finds the end (one past '}') of the balanced object starting at `start`,
// skipping string contents. npos when unbalanced.
std::size_t balanced_object_end(const std::string& text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) return i + 1;
        }
    }
    return std::string::npos;
}

// First balanced JSON object in `text` that parses and carries all `keys`.
std::optional<json> find_object_with_keys(const std::string& text,
                                          const std::vector<std::string>& keys) {
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string::npos) {
        const std::size_t end = balanced_object_end(text, pos);
        if (end == std::string::npos) {
            ++pos;
            continue;
        }
        json j = json::parse(text.substr(pos, end - pos), nullptr, false);
        if (j.is_object()) {
            bool all = true;
            for (const auto& k : keys)
                if (!j.contains(k)) {
                    all = false;
                    break;
                }
            if (all) return j;
        }
        ++pos;
    }
    return std::nullopt;
}

// Integer-valued JSON numbers only; "7" as a string is tolerated.
std::optional<int> as_int(const json& v) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d) return static_cast<int>(d);
        return std::nullopt;
    }
    if (v.is_string()) {
        const std::string s = trim(v.get<std::string>());
        if (s.empty()) return std::nullopt;
        std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
        if (i == s.size()) return std::nullopt;
        for (; i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
        return std::atoi(s.c_str());
    }
    return std::nullopt;
}

struct KeyedIntResult {
    std::vector<int> values;
    std::string error;
};

KeyedIntResult parse_keyed_ints(const std::string& text, const std::vector<std::string>& keys,
                                int lo, int hi) {
    KeyedIntResult out;
    const auto obj = find_object_with_keys(text, keys);
    if (!obj) {
        out.error = "no JSON object with the required rating keys";
        return out;
    }
    for (const auto& k : keys) {
        const auto v = as_int((*obj)[k]);
        if (!v) {
            out.error = "non-integer value for key '" + k + "'";
            return out;
        }
        if (*v < lo || *v > hi) {
            out.error = "value " + std::to_string(*v) + " for key '" + k + "' outside " +
                        std::to_string(lo) + "-" + std::to_string(hi);
            return out;
        }
        out.values.push_back(*v);
    }
    return out;
}

// Text after `marker`, cut at the terminator when given.
std::optional<std::string> section_after(const std::string& text, const std::string& marker,
                                         const std::string& until = {}) {
    const std::size_t pos = text.find(marker);
    if (pos == std::string::npos) return std::nullopt;
    const std::size_t begin = pos + marker.size();
    std::size_t end = text.size();
    if (!until.empty()) {
        const std::size_t t = text.find(until, begin);
        if (t != std::string::npos) end = t;
    }
    return text.substr(begin, end - begin);
}

}  // namespace

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space_byte(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space_byte(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

ParseResult<ScoreReport> parse_rating(const std::string& text) {
    const auto r = parse_keyed_ints(
        text, {"Complexity", "Information Value", "Clarity", "Overall rating"}, 1, 10);
    if (!r.error.empty()) return ParseResult<ScoreReport>::failure(r.error);
    ScoreReport report;
    report.complexity = r.values[0];
    report.info_value = r.values[1];
    report.clarity = r.values[2];
    report.overall_raw = r.values[3];
    report.overall_norm = report.overall_raw / 2.0;
    return ParseResult<ScoreReport>::success(report);
}

ParseResult<PairRating> parse_pair_rating(const std::string& text) {
    const auto r = parse_keyed_ints(
        text, {"Clarity", "Correctness", "Completeness", "Overall rating"}, 1, 5);
    if (!r.error.empty()) return ParseResult<PairRating>::failure(r.error);
    PairRating rating;
    rating.clarity = r.values[0];
    rating.correctness = r.values[1];
    rating.completeness = r.values[2];
    rating.overall_raw = r.values[3];
    return ParseResult<PairRating>::success(rating);
}

ParseResult<std::string> parse_rephrase(const std::string& text) {
    static const std::string kMarker = "#Finally Rewritten question#";
    const std::size_t pos = text.rfind(kMarker);
    if (pos == std::string::npos)
        return ParseResult<std::string>::failure("missing '" + kMarker + "' marker");
    std::size_t begin = pos + kMarker.size();
    if (begin < text.size() && text[begin] == ':') ++begin;
    const std::string question = trim(text.substr(begin));
    if (question.empty())
        return ParseResult<std::string>::failure("empty rewritten question");
    return ParseResult<std::string>::success(question);
}

ParseResult<ReviewVerdict> parse_review(const std::string& text) {
    static const std::string kThought = "###thought###";
    static const std::string kScore = "###rating_score###";
    static const std::string kSuggestions = "###suggestions###";
    static const std::string kImprovement = "###Specific improvement";

    const std::size_t score_pos = text.find(kScore);
    if (score_pos == std::string::npos)
        return ParseResult<ReviewVerdict>::failure("missing '" + kScore + "' marker");

    ReviewVerdict verdict;
    const std::size_t thought_pos = text.find(kThought);
    if (thought_pos != std::string::npos && thought_pos < score_pos) {
        const std::size_t b = thought_pos + kThought.size();
        verdict.thought = trim(text.substr(b, score_pos - b));
    } else {
        verdict.thought = trim(text.substr(0, score_pos));
    }

    // Score list: the first [...] after the marker, elements quoted or bare.
    const std::size_t lb = text.find('[', score_pos);
    if (lb == std::string::npos)
        return ParseResult<ReviewVerdict>::failure("missing score list");
    const std::size_t rb = text.find(']', lb);
    if (rb == std::string::npos)
        return ParseResult<ReviewVerdict>::failure("unterminated score list");
    const std::string list_text = text.substr(lb, rb - lb + 1);

    std::vector<int> scores;
    json arr = json::parse(list_text, nullptr, false);
    if (arr.is_array()) {
        for (const auto& el : arr) {
            const auto v = as_int(el);
            if (!v) return ParseResult<ReviewVerdict>::failure("non-integer review score");
            scores.push_back(*v);
        }
    } else {
        // Tolerate unquoted or loosely quoted elements: split on commas.
        std::string inner = list_text.substr(1, list_text.size() - 2);
        std::size_t start = 0;
        while (start <= inner.size()) {
            std::size_t comma = inner.find(',', start);
            if (comma == std::string::npos) comma = inner.size();
            std::string tok = trim(inner.substr(start, comma - start));
            if (!tok.empty() && tok.front() == '"' && tok.back() == '"' && tok.size() >= 2)
                tok = trim(tok.substr(1, tok.size() - 2));
            if (tok.empty())
                return ParseResult<ReviewVerdict>::failure("empty review score element");
            const auto v = as_int(json(tok));
            if (!v) return ParseResult<ReviewVerdict>::failure("non-integer review score");
            scores.push_back(*v);
            start = comma + 1;
        }
    }

    if (scores.size() != 3)
        return ParseResult<ReviewVerdict>::failure(
            "expected 3 review scores, got " + std::to_string(scores.size()));
    for (int s : scores)
        if (s < 1 || s > 5)
            return ParseResult<ReviewVerdict>::failure(
                "review score " + std::to_string(s) + " outside 1-5");

    verdict.clarity_grammar = scores[0];
    verdict.logic_completeness = scores[1];
    verdict.validity_solvability = scores[2];
    verdict.mean = (scores[0] + scores[1] + scores[2]) / 3.0;

    // Suggestions are optional; each block runs until the next ### marker.
    std::size_t pos = text.find(kSuggestions, rb);
    std::size_t scan = pos == std::string::npos ? rb : pos;
    while ((pos = text.find(kImprovement, scan)) != std::string::npos) {
        std::size_t body_start = text.find("###", pos + 3);
        if (body_start == std::string::npos) break;
        body_start += 3;
        std::size_t body_end = text.find("###", body_start);
        if (body_end == std::string::npos) body_end = text.size();
        const std::string suggestion = trim(text.substr(body_start, body_end - body_start));
        if (!suggestion.empty()) verdict.suggestions.push_back(suggestion);
        scan = body_end;
    }
    return ParseResult<ReviewVerdict>::success(std::move(verdict));
}

ParseResult<Revision> parse_revise(const std::string& text) {
    static const std::string kQuestion = "###revised_question###";
    static const std::string kNotes = "###revision_notes###";

    const auto question_block = section_after(text, kQuestion, kNotes);
    if (!question_block)
        return ParseResult<Revision>::failure("missing '" + kQuestion + "' marker");
    Revision rev;
    rev.question = trim(*question_block);
    if (rev.question.empty())
        return ParseResult<Revision>::failure("empty revised question");
    if (const auto notes = section_after(text, kNotes)) rev.notes = trim(*notes);
    return ParseResult<Revision>::success(std::move(rev));
}

ParseResult<SolutionRecord> parse_solution(const std::string& text) {
    static const std::string kThought = "###thought###";
    static const std::string kAnswer = "###answer###";

    const std::size_t thought_pos = text.find(kThought);
    if (thought_pos == std::string::npos)
        return ParseResult<SolutionRecord>::failure("missing '" + kThought + "' marker");
    const std::size_t answer_pos = text.find(kAnswer, thought_pos + kThought.size());
    if (answer_pos == std::string::npos)
        return ParseResult<SolutionRecord>::failure("missing '" + kAnswer + "' marker");

    SolutionRecord record;
    record.thought =
        trim(text.substr(thought_pos + kThought.size(), answer_pos - thought_pos - kThought.size()));
    if (record.thought.empty())
        return ParseResult<SolutionRecord>::failure("empty reasoning section");

    // Answer: first line after the marker, skipping leading whitespace and
    // cutting at any further marker so stray grammar echoes never leak in.
    std::size_t b = answer_pos + kAnswer.size();
    while (b < text.size() && is_space_byte(static_cast<unsigned char>(text[b]))) ++b;
    std::size_t e = text.find('\n', b);
    if (e == std::string::npos) e = text.size();
    std::string answer = text.substr(b, e - b);
    const std::size_t hash = answer.find("###");
    if (hash != std::string::npos) answer = answer.substr(0, hash);
    answer = trim(answer);
    if (answer.empty()) return ParseResult<SolutionRecord>::failure("empty answer");
    record.answer = answer;
    return ParseResult<SolutionRecord>::success(std::move(record));
}

}  // namespace mathforge::prompts
