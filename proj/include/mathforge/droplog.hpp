#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace mathforge {

// Machine-readable reasons for every item the pipeline gives up on.
// Quality-based discards are stage outcomes, not drops, and live in the
// stage checkpoints instead.
enum class DropReason {
    parse_failure,       // agent reply never parsed within the retry budget
    gateway_error,       // transport/auth/quota exhausted
    rephrase_shortfall,  // fewer rephrase candidates than requested
    agent_failure,       // review-revise loop aborted mid-flight
    no_solution,         // solver produced nothing usable for a sample
    duplicate_seed,      // same question text ingested twice
    empty_text,          // blank after normalization
    scale_shortfall,     // not enough fresh solutions; fell back to copies
};

const char* to_string(DropReason r);

struct DropEntry {
    std::string stage;
    std::string item_id;
    DropReason reason = DropReason::parse_failure;
    std::string detail;
};

// Collects drops during a stage; the runner persists one JSONL file per
// stage so a re-run replaces exactly its own entries.
class DropLog {
public:
    void add(std::string stage, std::string item_id, DropReason reason, std::string detail = {});

    const std::vector<DropEntry>& entries() const { return entries_; }
    std::size_t count() const { return entries_.size(); }

    void write(const std::filesystem::path& path) const;

private:
    mutable std::mutex mutex_;
    std::vector<DropEntry> entries_;
};

nlohmann::json to_json(const DropEntry& e);

}  // namespace mathforge
