#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mathforge/assembly.hpp"
#include "mathforge/stage1.hpp"
#include "mathforge/stage2.hpp"
#include "mathforge/stage4.hpp"
#include "mathforge/types.hpp"

// Stage checkpoint schemas. Each stage persists one JSON object per line;
// downstream stages rebuild their inputs from these files alone, which is
// what makes subcommand runs and crash resume equivalent to a straight-through
// run.
namespace mathforge::checkpoint {

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

struct Stage1Row {
    SeedProblem seed;
    ScoreReport report;
    double s_bar = 0.0;
    double s_tilde = 0.0;
    bool kept = false;
};

nlohmann::json to_json(const Stage1Row& row);
Stage1Row stage1_row_from_json(const nlohmann::json& j);

struct Stage2Row {
    RephrasedProblem candidate;
    LoopTrace trace;
};

nlohmann::json to_json(const Stage2Row& row);
Stage2Row stage2_row_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SolutionRecord& record);
SolutionRecord solution_from_json(const nlohmann::json& j);

struct Stage4Row {
    std::string pair_id;
    std::string question_id;
    int sample_index = 0;
    PairScore score;
    int level = 0;
    bool selected = false;
    int selection_rank = -1;  // -1 when not selected
};

nlohmann::json to_json(const Stage4Row& row);
Stage4Row stage4_row_from_json(const nlohmann::json& j);

}  // namespace mathforge::checkpoint
