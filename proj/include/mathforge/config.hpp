#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mathforge/assembly.hpp"
#include "mathforge/gateway.hpp"
#include "mathforge/stage1.hpp"
#include "mathforge/stage2.hpp"
#include "mathforge/stage4.hpp"

namespace mathforge {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CurationConfig {
    int k = 5;
    double deviation_threshold = 1.5;
    int min_agreement = 4;
};

struct PathsConfig {
    std::string seeds_gsm8k;
    std::string seeds_math;
    std::string workdir = "work";
    std::string output = "work/final.jsonl";
};

struct PipelineConfig {
    llm::BackendConfig backend;
    FilterConfig stage1;
    LoopConfig stage2;
    SelectionConfig stage4;
    CurationConfig curation;
    PathsConfig paths;
    int samples_per_question = 1;
    int scale_factor = 1;
    ScaleMode scale_mode = ScaleMode::fresh;
    std::uint64_t rng_seed = 20240718;
};

// JSON config file; unknown keys are rejected so typos surface early.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

// Canonical full serialization (sorted keys); basis of all fingerprints.
nlohmann::json to_json(const PipelineConfig& cfg);

// Throws ConfigError listing every violated constraint, including missing
// seed files and an uncreatable output directory.
void validate(const PipelineConfig& cfg);

std::string config_fingerprint(const PipelineConfig& cfg);

// Config fields a stage's output depends on (stage 1..4). Used to decide
// whether an existing checkpoint is still valid on --resume.
nlohmann::json stage_subset(const PipelineConfig& cfg, int stage);

// Chained over the upstream stages, so a change to stage k's knobs
// invalidates stages k..4 but leaves 1..k-1 intact.
std::string stage_fingerprint(const PipelineConfig& cfg, int stage);

}  // namespace mathforge
