#include "mathforge/prompts.hpp"

#include "mathforge/prompt_texts.hpp"

namespace mathforge::prompts {

const char* to_string(Name n) {
    switch (n) {
        case Name::rating: return "rating";
        case Name::rephrase: return "rephrase";
        case Name::review: return "review";
        case Name::revise: return "revise";
        case Name::solve_arith: return "solve_arith";
        case Name::solve_comp: return "solve_comp";
        case Name::pair_rating: return "pair_rating";
    }
    return "unknown";
}

const std::vector<Template>& all() {
    static const std::vector<Template> templates = {
        {Name::rating, detail::k_rating, {"question"}},
        {Name::rephrase, detail::k_rephrase, {"question"}},
        {Name::review, detail::k_review, {"rephrased_question"}},
        {Name::revise, detail::k_revise, {"suggestions", "rephrased_question"}},
        {Name::solve_arith, detail::k_solve_arith, {"question"}},
        {Name::solve_comp, detail::k_solve_comp, {"question"}},
        {Name::pair_rating, detail::k_pair_rating, {"question", "solution"}},
    };
    return templates;
}

const Template& get(Name n) {
    for (const auto& t : all())
        if (t.name == n) return t;
    throw PromptError("unknown template");
}

std::string render(Name n, const std::map<std::string, std::string>& slots) {
    const Template& t = get(n);
    for (const auto& slot : t.slots) {
        if (!slots.count(slot)) throw PromptError("missing slot: " + slot);
    }

    const std::string_view body = t.body;
    std::string out;
    out.reserve(body.size());
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] == '{') {
            bool substituted = false;
            for (const auto& slot : t.slots) {
                const std::size_t end = i + 1 + slot.size();
                if (end < body.size() && body.compare(i + 1, slot.size(), slot) == 0 &&
                    body[end] == '}') {
                    out += slots.at(slot);
                    i = end + 1;
                    substituted = true;
                    break;
                }
            }
            if (substituted) continue;
        }
        out.push_back(body[i]);
        ++i;
    }
    return out;
}

}  // namespace mathforge::prompts
