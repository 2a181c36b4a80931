#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mathforge::prompts {

// The agent prompts, one per role. solve_arith and solve_comp differ only in
// the worked exemplar; pair_rating scores problem-solution pairs.
enum class Name {
    rating,
    rephrase,
    review,
    revise,
    solve_arith,
    solve_comp,
    pair_rating,
};

const char* to_string(Name n);

struct Template {
    Name name;
    std::string_view body;
    std::vector<std::string> slots;
};

class PromptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const Template& get(Name n);
const std::vector<Template>& all();

// Substitutes every {slot} occurrence in one pass over the template; values
// are never rescanned, so braces inside slot values stay literal. Throws
// PromptError naming the first declared slot missing from the map.
std::string render(Name n, const std::map<std::string, std::string>& slots);

}  // namespace mathforge::prompts
