#include <sstream>

#include "mathforge/gateway.hpp"
#include "mathforge/text.hpp"

namespace mathforge::llm {

namespace {

// Substring after the last occurrence of `marker`, optionally cut at `until`.
std::string after_marker(const std::string& text, const std::string& marker,
                         const std::string& until = {}) {
    const std::size_t pos = text.rfind(marker);
    if (pos == std::string::npos) return {};
    const std::size_t begin = pos + marker.size();
    std::size_t end = text.size();
    if (!until.empty()) {
        const std::size_t u = text.find(until, begin);
        if (u != std::string::npos) end = u;
    }
    return normalize_text(text.substr(begin, end - begin));
}

}  // namespace

MockBackend::MockBackend(int embed_dim) : embedder_(embed_dim) {}

void MockBackend::script(const std::string& tag, std::string response) {
    std::lock_guard lock(mutex_);
    scripts_[tag].push_back(std::move(response));
}

void MockBackend::set_handler(const std::string& tag, Handler handler) {
    std::lock_guard lock(mutex_);
    handlers_[tag] = std::move(handler);
}

ChatResponse MockBackend::complete(const ChatRequest& req) {
    ChatResponse resp;
    resp.backend_id = "mock";
    {
        std::lock_guard lock(mutex_);
        const auto s = scripts_.find(req.tag);
        if (s != scripts_.end() && script_pos_[req.tag] < s->second.size()) {
            resp.text = s->second[script_pos_[req.tag]++];
            return resp;
        }
        const auto h = handlers_.find(req.tag);
        if (h != handlers_.end()) {
            resp.text = h->second(req);
            return resp;
        }
    }
    resp.text = synthesize(req);
    return resp;
}

// Fabricated agent replies: well-formed for each tag's grammar and a pure
// function of the request content, so offline runs are reproducible.
std::string MockBackend::synthesize(const ChatRequest& req) const {
    const std::uint64_t h =
        splitmix64(fnv1a64(req.user) ^ splitmix64(static_cast<std::uint64_t>(req.salt) + 1));
    std::ostringstream os;

    if (req.tag == "rating") {
        const int c = 4 + static_cast<int>(h % 7);
        const int v = 4 + static_cast<int>((h >> 8) % 7);
        const int p = 4 + static_cast<int>((h >> 16) % 7);
        const int overall = (c + v + p + 2) / 3;
        os << "{\"Complexity\": " << c << ", \"Information Value\": " << v
           << ", \"Clarity\": " << p << ", \"Overall rating\": " << overall << "}";
        return os.str();
    }

    if (req.tag == "rephrase") {
        const std::string base = after_marker(req.user, "Given problem: ");
        os << "Stage 1\n#Problem Deconstruction#: word problem; arithmetic reasoning\n"
           << "Stage 2\n#Escalation Protocol#: multi-stage transformation; "
              "real-world parameterization; conditional branching\n"
           << "Stage 3\n#Finally Rewritten question#: " << base
           << " After finding that value, report the result obtained when it is increased by "
           << 2 + h % 89 << ".";
        return os.str();
    }

    if (req.tag == "review") {
        const int a = 3 + static_cast<int>(h % 3);
        const int b = 3 + static_cast<int>((h >> 4) % 3);
        const int c = 3 + static_cast<int>((h >> 8) % 3);
        os << "###thought###\nThe question is checked against each criterion in turn.\n"
           << "###rating_score###\n[\"" << a << "\", \"" << b << "\", \"" << c << "\"]\n"
           << "###suggestions###\n";
        if (a < 5)
            os << "###Specific improvement 1###\nState every given quantity explicitly "
                  "before asking for the result.\n";
        if (b < 5)
            os << "###Specific improvement 2###\nSpell out the order of the intermediate "
                  "computations.\n";
        return os.str();
    }

    if (req.tag == "revise") {
        const std::string base =
            after_marker(req.user, "original question: ", "** Output Requirements **");
        os << "###revised_question###\n" << base << " (restated with step " << h % 10
           << " made explicit)\n###revision_notes###\nTightened the phrasing per the "
              "suggestions.";
        return os.str();
    }

    if (req.tag == "solve_arith" || req.tag == "solve_comp") {
        const std::string question = after_marker(req.user, "Question: ", "\n\nOutput:");
        os << "###thought### Break the problem into its quantities, compute each "
              "intermediate value in order, and combine them for the final result. "
              "(question of "
           << split_whitespace(question).size() << " words) ###answer### " << h % 997;
        return os.str();
    }

    if (req.tag == "pair_rating") {
        const int c = 3 + static_cast<int>(h % 3);
        const int r = 3 + static_cast<int>((h >> 4) % 3);
        const int p = 3 + static_cast<int>((h >> 8) % 3);
        const int overall = (c + r + p + 2) / 3;
        os << "{\"Clarity\": " << c << ", \"Correctness\": " << r << ", \"Completeness\": " << p
           << ", \"Overall rating\": " << overall << "}";
        return os.str();
    }

    throw GatewayError(GatewayErrorKind::internal,
                       "mock backend has no script, handler, or synthesizer for tag '" +
                           req.tag + "'");
}

std::vector<EmbeddingVector> MockBackend::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embedder_.embed(t));
    return out;
}

}  // namespace mathforge::llm
