#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathforge/droplog.hpp"
#include "mathforge/ids.hpp"
#include "mathforge/types.hpp"

namespace mathforge {

enum class ScaleMode { fresh, literal };

const char* to_string(ScaleMode m);
ScaleMode scale_mode_from_string(const std::string& s);

// Training-text rendering of a solution record.
std::string format_solution(const SolutionRecord& record);

// Union of the selected synthetic pairs with the seed-solution pairs,
// deduplicated by question content hash (the seed-origin pair wins a
// collision), then shuffled with the given seed. Output ids are reassigned in
// shuffled order from `ids`.
std::vector<TrainingPair> assemble(const std::vector<TrainingPair>& selected,
                                   const std::vector<TrainingPair>& seed_solved,
                                   std::uint64_t shuffle_seed, IdAllocator& ids,
                                   DropLog* drops = nullptr);

// Repeats the dataset `factor` times. In fresh mode occurrence t carries the
// question's sample-t solution; questions with fewer solutions fall back to
// literal copies (logged). factor == 1 returns the input unchanged.
std::vector<TrainingPair> scale_dataset(
    const std::vector<TrainingPair>& base, int factor,
    const std::map<std::string, std::vector<SolutionRecord>>& solutions_by_question,
    ScaleMode mode, IdAllocator& ids, DropLog* drops = nullptr);

// Test seam: observe (or sabotage) the export after each written line.
struct ExportHooks {
    std::function<void(std::size_t lines_written)> after_line;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Writes the dataset as JSONL (UTF-8, LF) and a manifest JSON next to it
// (<output>.manifest.json). Both writes are atomic: temp file then rename,
// with the temp removed on failure. `manifest_fields` are merged into the
// manifest next to the computed per-origin counts. Returns the manifest.
nlohmann::json export_dataset(const std::vector<TrainingPair>& dataset,
                              const std::filesystem::path& output,
                              nlohmann::json manifest_fields,
                              const ExportHooks* hooks = nullptr);

std::filesystem::path manifest_path_for(const std::filesystem::path& output);

// Inverse of export_dataset's data file.
std::vector<TrainingPair> import_dataset(const std::filesystem::path& path);

nlohmann::json to_json(const TrainingPair& pair);
TrainingPair training_pair_from_json(const nlohmann::json& j);

}  // namespace mathforge
