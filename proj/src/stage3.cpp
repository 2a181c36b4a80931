#include "mathforge/stage3.hpp"

#include <algorithm>

#include "mathforge/agent_call.hpp"
#include "mathforge/prompts.hpp"

namespace mathforge {

prompts::ParseResult<SolutionRecord> solve_question(const SolveTask& task, int sample_index,
                                                    llm::Gateway& gateway) {
    const auto prompt_name = task.flavor == Flavor::arithmetic_word
                                 ? prompts::Name::solve_arith
                                 : prompts::Name::solve_comp;
    llm::ChatRequest req;
    req.tag = prompts::to_string(prompt_name);
    req.user = prompts::render(prompt_name, {{"question", task.text}});
    req.salt = sample_index * kSaltStride;

    const auto result = call_agent<SolutionRecord>(gateway, req, prompts::parse_solution);
    if (!result.ok()) return prompts::ParseResult<SolutionRecord>::failure(result.error);
    SolutionRecord record = *result.value;
    record.question_id = task.question_id;
    record.sample_index = sample_index;
    return prompts::ParseResult<SolutionRecord>::success(std::move(record));
}

SolveReport solve_corpus(const std::vector<SolveTask>& tasks, llm::Gateway& gateway,
                         int samples_per_question, DropLog* drops) {
    if (samples_per_question < 1)
        throw std::invalid_argument("samples_per_question must be at least 1");

    const std::size_t total = tasks.size() * static_cast<std::size_t>(samples_per_question);
    std::vector<std::optional<SolutionRecord>> slots(total);
    std::vector<std::string> errors(total);

    const auto workers = static_cast<std::size_t>(gateway.config().max_in_flight);
    llm::parallel_for_index(total, workers, [&](std::size_t flat) {
        const std::size_t t = flat / static_cast<std::size_t>(samples_per_question);
        const int sample = static_cast<int>(flat % static_cast<std::size_t>(samples_per_question));
        auto solved = solve_question(tasks[t], sample, gateway);
        if (solved.ok())
            slots[flat] = std::move(*solved.value);
        else
            errors[flat] = solved.error;
    });

    SolveReport report;
    report.records.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        if (slots[flat]) {
            report.records.push_back(std::move(*slots[flat]));
            continue;
        }
        ++report.failures;
        if (drops) {
            const std::size_t t = flat / static_cast<std::size_t>(samples_per_question);
            const auto sample = flat % static_cast<std::size_t>(samples_per_question);
            drops->add("stage3", tasks[t].question_id + "#" + std::to_string(sample),
                       DropReason::no_solution, errors[flat]);
        }
    }
    std::sort(report.records.begin(), report.records.end(),
              [](const SolutionRecord& a, const SolutionRecord& b) {
                  if (a.question_id != b.question_id) return a.question_id < b.question_id;
                  return a.sample_index < b.sample_index;
              });
    return report;
}

}  // namespace mathforge
