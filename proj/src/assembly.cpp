#include "mathforge/assembly.hpp"

#include <fstream>
#include <unordered_set>

#include "mathforge/text.hpp"

namespace mathforge {

using nlohmann::json;

const char* to_string(ScaleMode m) {
    return m == ScaleMode::fresh ? "fresh" : "literal";
}

ScaleMode scale_mode_from_string(const std::string& s) {
    if (s == "fresh") return ScaleMode::fresh;
    if (s == "literal") return ScaleMode::literal;
    throw std::invalid_argument("unknown scale mode: " + s);
}

std::string format_solution(const SolutionRecord& record) {
    return record.thought + "\nFinal answer: " + record.answer;
}

namespace {

// Fisher-Yates with a fully specified generator, so shuffles are identical
// across platforms and standard libraries.
class SeededShuffler {
public:
    explicit SeededShuffler(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        return splitmix64(state_);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace

std::vector<TrainingPair> assemble(const std::vector<TrainingPair>& selected,
                                   const std::vector<TrainingPair>& seed_solved,
                                   std::uint64_t shuffle_seed, IdAllocator& ids,
                                   DropLog* drops) {
    std::vector<TrainingPair> combined;
    combined.reserve(selected.size() + seed_solved.size());
    std::unordered_set<std::string> seen;

    // Seeds first so they own their question hashes on collision.
    for (const auto& pair : seed_solved) {
        if (!seen.insert(content_hash(pair.question)).second) {
            if (drops)
                drops->add("assemble", pair.id, DropReason::duplicate_seed,
                           "duplicate question among seed pairs");
            continue;
        }
        combined.push_back(pair);
    }
    for (const auto& pair : selected) {
        if (!seen.insert(content_hash(pair.question)).second) {
            if (drops)
                drops->add("assemble", pair.id, DropReason::duplicate_seed,
                           "question collides with a seed pair");
            continue;
        }
        combined.push_back(pair);
    }

    SeededShuffler shuffler(shuffle_seed);
    shuffler.shuffle(combined);
    for (auto& pair : combined) pair.id = ids.next();
    return combined;
}

std::vector<TrainingPair> scale_dataset(
    const std::vector<TrainingPair>& base, int factor,
    const std::map<std::string, std::vector<SolutionRecord>>& solutions_by_question,
    ScaleMode mode, IdAllocator& ids, DropLog* drops) {
    if (factor < 1) throw std::invalid_argument("scale factor must be at least 1");
    if (factor == 1) return base;

    std::vector<TrainingPair> out;
    out.reserve(base.size() * static_cast<std::size_t>(factor));
    std::unordered_set<std::string> shortfall_logged;

    for (int occurrence = 0; occurrence < factor; ++occurrence) {
        for (const auto& pair : base) {
            TrainingPair copy = pair;
            copy.id = ids.next();
            if (mode == ScaleMode::fresh && occurrence > 0) {
                // The question id is the head of the lineage chain.
                const std::string question_id = pair.lineage.empty() ? "" : pair.lineage.front();
                const auto it = solutions_by_question.find(question_id);
                if (it != solutions_by_question.end() &&
                    static_cast<int>(it->second.size()) > occurrence) {
                    copy.solution = format_solution(it->second[static_cast<std::size_t>(occurrence)]);
                    copy.sample_index = it->second[static_cast<std::size_t>(occurrence)].sample_index;
                } else {
                    if (drops && shortfall_logged.insert(pair.id).second)
                        drops->add("assemble", pair.id, DropReason::scale_shortfall,
                                   "fewer solutions than scale factor; copied sample 0");
                    copy.sample_index = pair.sample_index;
                }
            }
            out.push_back(std::move(copy));
        }
    }
    return out;
}

json to_json(const TrainingPair& pair) {
    return {{"id", pair.id},
            {"question", pair.question},
            {"solution", pair.solution},
            {"origin", to_string(pair.origin)},
            {"lineage", pair.lineage},
            {"sample_index", pair.sample_index}};
}

TrainingPair training_pair_from_json(const json& j) {
    TrainingPair pair;
    pair.id = j.at("id").get<std::string>();
    pair.question = j.at("question").get<std::string>();
    pair.solution = j.at("solution").get<std::string>();
    pair.origin = origin_from_string(j.at("origin").get<std::string>());
    pair.lineage = j.at("lineage").get<std::vector<std::string>>();
    pair.sample_index = j.at("sample_index").get<int>();
    return pair;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
    std::filesystem::path p = output;
    p += ".manifest.json";
    return p;
}

namespace {

void atomic_write(const std::filesystem::path& target,
                  const std::function<void(std::ofstream&)>& writer) {
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        try {
            writer(out);
            out.flush();
            if (!out) throw IoError("write to " + tmp.string() + " failed");
        } catch (...) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw;
        }
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace

json export_dataset(const std::vector<TrainingPair>& dataset,
                    const std::filesystem::path& output, json manifest_fields,
                    const ExportHooks* hooks) {
    if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());

    atomic_write(output, [&](std::ofstream& out) {
        std::size_t written = 0;
        for (const auto& pair : dataset) {
            out << to_json(pair).dump() << '\n';
            ++written;
            if (hooks && hooks->after_line) hooks->after_line(written);
        }
    });

    std::size_t seed_count = 0;
    std::size_t synth_count = 0;
    for (const auto& pair : dataset)
        (pair.origin == Origin::seed ? seed_count : synth_count) += 1;

    json manifest = std::move(manifest_fields);
    manifest["counts"] = {{"seed", seed_count},
                          {"synthesized", synth_count},
                          {"total", dataset.size()}};
    atomic_write(manifest_path_for(output),
                 [&](std::ofstream& out) { out << manifest.dump(2) << '\n'; });
    return manifest;
}

std::vector<TrainingPair> import_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path.string());
    std::vector<TrainingPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw IoError("malformed JSON at " + path.string() + ":" + std::to_string(lineno));
        out.push_back(training_pair_from_json(j));
    }
    return out;
}

}  // namespace mathforge
