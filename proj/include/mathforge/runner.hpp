#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>

#include "mathforge/config.hpp"
#include "mathforge/droplog.hpp"
#include "mathforge/gateway.hpp"
#include "mathforge/ids.hpp"

namespace mathforge {

class StageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LockError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PipelineStage { filter = 1, forge = 2, solve = 3, select = 4, assemble = 5 };

const char* to_string(PipelineStage s);

struct RunOptions {
    std::set<PipelineStage> stages;  // executed in pipeline order
    bool resume = false;
};

RunOptions all_stages();

// Reads the two seed files (JSONL with a "question" field; "problem" accepted
// as an alias), normalizes texts, drops blank and duplicate questions with a
// log, and assigns s1- ids in file order (GSM8K file first).
std::vector<SeedProblem> ingest_seeds(const PipelineConfig& cfg, IdAllocator& ids,
                                      DropLog& drops);

// Owns one pipeline run over a workdir: builds the gateway, executes stages
// in order, persists a checkpoint per stage, and honors --resume by skipping
// stages whose checkpoint exists under an unchanged config fingerprint.
// A lock file serializes runs on the same workdir.
class PipelineRunner {
public:
    explicit PipelineRunner(PipelineConfig cfg,
                            std::unique_ptr<llm::Backend> backend = nullptr);

    void run(const RunOptions& options);

    std::filesystem::path workdir() const { return workdir_; }
    std::filesystem::path stage_checkpoint(int stage) const;
    std::filesystem::path manifest_file() const;
    std::filesystem::path drops_file(int stage) const;

private:
    void run_stage1();
    void run_stage2();
    void run_stage3();
    void run_stage4();
    void run_assemble();

    bool can_skip(int stage, std::string* mismatch_diff) const;
    void record_stage(int stage, nlohmann::json diagnostics);
    nlohmann::json load_manifest() const;
    void save_manifest(const nlohmann::json& manifest) const;

    PipelineConfig cfg_;
    std::filesystem::path workdir_;
    std::unique_ptr<llm::Gateway> gateway_;
};

}  // namespace mathforge
