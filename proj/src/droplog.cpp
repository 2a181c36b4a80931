#include "mathforge/droplog.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

namespace mathforge {

const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::parse_failure: return "parse_failure";
        case DropReason::gateway_error: return "gateway_error";
        case DropReason::rephrase_shortfall: return "rephrase_shortfall";
        case DropReason::agent_failure: return "agent_failure";
        case DropReason::no_solution: return "no_solution";
        case DropReason::duplicate_seed: return "duplicate_seed";
        case DropReason::empty_text: return "empty_text";
        case DropReason::scale_shortfall: return "scale_shortfall";
    }
    return "unknown";
}

void DropLog::add(std::string stage, std::string item_id, DropReason reason, std::string detail) {
    std::lock_guard lock(mutex_);
    entries_.push_back({std::move(stage), std::move(item_id), reason, std::move(detail)});
}

nlohmann::json to_json(const DropEntry& e) {
    return {{"stage", e.stage},
            {"item_id", e.item_id},
            {"reason", to_string(e.reason)},
            {"detail", e.detail}};
}

void DropLog::write(const std::filesystem::path& path) const {
    std::lock_guard lock(mutex_);
    // Parallel stages append in completion order; sort so the file does not
    // depend on scheduling.
    std::vector<DropEntry> sorted = entries_;
    std::sort(sorted.begin(), sorted.end(), [](const DropEntry& a, const DropEntry& b) {
        return std::tie(a.stage, a.item_id, a.reason, a.detail) <
               std::tie(b.stage, b.item_id, b.reason, b.detail);
    });
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write drop log " + path.string());
    for (const auto& e : sorted) out << to_json(e).dump() << '\n';
}

}  // namespace mathforge
