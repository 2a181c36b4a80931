#include "mathforge/runner.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mathforge/checkpoint.hpp"
#include "mathforge/curation.hpp"
#include "mathforge/parsers.hpp"
#include "mathforge/stage3.hpp"
#include "mathforge/text.hpp"

namespace mathforge {

using nlohmann::json;

const char* to_string(PipelineStage s) {
    switch (s) {
        case PipelineStage::filter: return "filter";
        case PipelineStage::forge: return "forge";
        case PipelineStage::solve: return "solve";
        case PipelineStage::select: return "select";
        case PipelineStage::assemble: return "assemble";
    }
    return "unknown";
}

RunOptions all_stages() {
    RunOptions options;
    options.stages = {PipelineStage::filter, PipelineStage::forge, PipelineStage::solve,
                      PipelineStage::select, PipelineStage::assemble};
    return options;
}

namespace {

// One running pipeline per workdir. The lock file holds the owner pid; a lock
// left behind by a dead process is reclaimed so kill-and-resume works.
class LockFile {
public:
    explicit LockFile(std::filesystem::path path) : path_(std::move(path)) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if (fd_ >= 0) {
                const std::string pid = std::to_string(::getpid()) + "\n";
                [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
                return;
            }
            // Lock exists; reclaim it when the owner is gone.
            std::ifstream in(path_);
            long pid = 0;
            in >> pid;
            if (pid > 0 && ::kill(static_cast<pid_t>(pid), 0) == 0)
                throw LockError("workdir is locked by running pid " + std::to_string(pid) +
                                " (" + path_.string() + ")");
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
        throw LockError("cannot acquire lock " + path_.string());
    }

    ~LockFile() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }

    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream os;
    os << in.rdbuf();
    return digest_hex(os.str());
}

json transition_to_json(const curation::TransitionMatrix& t) {
    json noise = json::array();
    for (std::size_t i = 0; i < t.levels.size(); ++i) noise.push_back(t.noise_estimate(i));
    return {{"levels", t.levels}, {"rows", t.rows}, {"noise_estimate", noise}};
}

std::vector<SeedProblem> read_seed_file(const std::filesystem::path& path, Source source,
                                        IdAllocator& ids, DropLog& drops,
                                        std::unordered_set<std::string>& seen_hashes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open seed file " + path.string());

    std::vector<SeedProblem> seeds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (prompts::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ConfigError("malformed seed line at " + path.string() + ":" +
                              std::to_string(lineno));
        std::string raw;
        if (j.contains("question") && j["question"].is_string())
            raw = j["question"].get<std::string>();
        else if (j.contains("problem") && j["problem"].is_string())
            raw = j["problem"].get<std::string>();
        else
            throw ConfigError("seed line missing a question/problem field at " + path.string() +
                              ":" + std::to_string(lineno));

        SeedProblem seed;
        seed.id = ids.next();
        seed.text = normalize_text(raw);
        seed.source = source;
        if (seed.text.empty()) {
            drops.add("stage1", seed.id, DropReason::empty_text,
                      path.filename().string() + ":" + std::to_string(lineno));
            continue;
        }
        if (!seen_hashes.insert(content_hash(seed.text)).second) {
            drops.add("stage1", seed.id, DropReason::duplicate_seed,
                      path.filename().string() + ":" + std::to_string(lineno));
            continue;
        }
        seeds.push_back(std::move(seed));
    }
    return seeds;
}

}  // namespace

std::vector<SeedProblem> ingest_seeds(const PipelineConfig& cfg, IdAllocator& ids,
                                      DropLog& drops) {
    std::unordered_set<std::string> seen;
    auto seeds = read_seed_file(cfg.paths.seeds_gsm8k, Source::gsm8k, ids, drops, seen);
    auto math = read_seed_file(cfg.paths.seeds_math, Source::math, ids, drops, seen);
    seeds.insert(seeds.end(), std::make_move_iterator(math.begin()),
                 std::make_move_iterator(math.end()));
    return seeds;
}

PipelineRunner::PipelineRunner(PipelineConfig cfg, std::unique_ptr<llm::Backend> backend)
    : cfg_(std::move(cfg)), workdir_(cfg_.paths.workdir) {
    validate(cfg_);
    std::filesystem::create_directories(workdir_);
    gateway_ = std::make_unique<llm::Gateway>(cfg_.backend, std::move(backend));
}

std::filesystem::path PipelineRunner::stage_checkpoint(int stage) const {
    return workdir_ / ("stage" + std::to_string(stage) + ".jsonl");
}

std::filesystem::path PipelineRunner::manifest_file() const {
    return workdir_ / "manifest.json";
}

std::filesystem::path PipelineRunner::drops_file(int stage) const {
    return workdir_ / ("drops.stage" + std::to_string(stage) + ".jsonl");
}

json PipelineRunner::load_manifest() const {
    std::ifstream in(manifest_file());
    if (!in) return json::object();
    json j = json::parse(in, nullptr, false);
    return j.is_object() ? j : json::object();
}

void PipelineRunner::save_manifest(const json& manifest) const {
    std::filesystem::path tmp = manifest_file();
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << manifest.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, manifest_file());
}

bool PipelineRunner::can_skip(int stage, std::string* mismatch_diff) const {
    if (!std::filesystem::exists(stage_checkpoint(stage))) return false;
    const json manifest = load_manifest();
    const std::string key = std::to_string(stage);
    if (!manifest.contains("stages") || !manifest["stages"].contains(key)) return false;
    const json& entry = manifest["stages"][key];
    const std::string want = stage_fingerprint(cfg_, stage);
    if (entry.value("fingerprint", std::string{}) == want) return true;

    if (mismatch_diff) {
        // Name the fields that changed since the checkpoint was written.
        std::ostringstream os;
        os << "stage " << stage << " checkpoint was built with a different configuration;";
        const json now = stage_subset(cfg_, stage);
        const json then = entry.value("params", json::object());
        for (const auto& [k, v] : now.items()) {
            if (!then.contains(k) || then[k] != v)
                os << "\n  " << k << ": " << (then.contains(k) ? then[k].dump() : "(unset)")
                   << " -> " << v.dump();
        }
        for (const auto& [k, v] : then.items())
            if (!now.contains(k)) os << "\n  " << k << ": " << v.dump() << " -> (removed)";
        *mismatch_diff = os.str();
    }
    return false;
}

void PipelineRunner::record_stage(int stage, json diagnostics) {
    json manifest = load_manifest();
    manifest["config_fingerprint"] = config_fingerprint(cfg_);
    manifest["rng_seed"] = cfg_.rng_seed;
    json entry{{"fingerprint", stage_fingerprint(cfg_, stage)},
               {"params", stage_subset(cfg_, stage)}};
    if (!diagnostics.is_null()) entry["diagnostics"] = std::move(diagnostics);
    manifest["stages"][std::to_string(stage)] = std::move(entry);
    save_manifest(manifest);
}

void PipelineRunner::run(const RunOptions& options) {
    LockFile lock(workdir_ / ".lock");

    const std::vector<PipelineStage> order = {PipelineStage::filter, PipelineStage::forge,
                                              PipelineStage::solve, PipelineStage::select,
                                              PipelineStage::assemble};
    for (PipelineStage stage : order) {
        if (!options.stages.count(stage)) continue;
        const int number = static_cast<int>(stage);
        if (stage != PipelineStage::assemble && options.resume) {
            std::string diff;
            if (can_skip(number, &diff)) continue;
            if (!diff.empty()) throw ConfigError("--resume refused: " + diff);
        }
        try {
            switch (stage) {
                case PipelineStage::filter: run_stage1(); break;
                case PipelineStage::forge: run_stage2(); break;
                case PipelineStage::solve: run_stage3(); break;
                case PipelineStage::select: run_stage4(); break;
                case PipelineStage::assemble: run_assemble(); break;
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(std::string(to_string(stage)) + " failed: " + e.what());
        }
    }
}

void PipelineRunner::run_stage1() {
    DropLog drops;
    IdAllocator seed_ids("s1");
    const auto seeds = ingest_seeds(cfg_, seed_ids, drops);
    if (seeds.empty()) throw StageError("no seeds survived ingestion");

    auto scored = score_seeds(seeds, *gateway_, cfg_.stage1, &drops);
    if (scored.empty()) throw StageError("no seeds survived scoring");

    std::vector<double> s_bars;
    s_bars.reserve(scored.size());
    for (const auto& s : scored) s_bars.push_back(s.aggregate_score);

    std::vector<double> curated = s_bars;
    json transition_diag;
    if (scored.size() >= 2) {
        std::vector<std::string> texts;
        texts.reserve(scored.size());
        for (const auto& s : scored) texts.push_back(s.seed.text);
        const auto embeddings = gateway_->embed(texts);
        const auto index = curation::build_knn(embeddings, cfg_.curation.k);
        curated = curation::curate(
            s_bars, index,
            {cfg_.curation.deviation_threshold, cfg_.curation.min_agreement});

        std::vector<double> snapped;
        snapped.reserve(s_bars.size());
        for (double s : s_bars) snapped.push_back(curation::snap_to_levels(s));
        transition_diag = transition_to_json(curation::estimate_transition(snapped, index));
    }

    filter_seeds(scored, curated, cfg_.stage1);

    std::vector<json> rows;
    rows.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        checkpoint::Stage1Row row;
        row.seed = scored[i].seed;
        row.report = scored[i].report;
        row.s_bar = scored[i].aggregate_score;
        row.s_tilde = curated[i];
        row.kept = scored[i].kept;
        rows.push_back(checkpoint::to_json(row));
    }
    checkpoint::write_jsonl(stage_checkpoint(1), rows);
    drops.write(drops_file(1));
    record_stage(1, transition_diag);
}

void PipelineRunner::run_stage2() {
    if (!std::filesystem::exists(stage_checkpoint(1)))
        throw StageError("forge requires the filter checkpoint (run stage 1 first)");

    std::vector<SeedProblem> kept;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(1))) {
        const auto row = checkpoint::stage1_row_from_json(row_json);
        if (row.kept) kept.push_back(row.seed);
    }

    DropLog drops;
    const int variants = cfg_.stage2.variants_per_seed;
    // Candidate ids are fixed up front so parallel execution cannot reorder
    // them: seed i, variant v -> counter i*variants + v + 1.
    std::vector<std::vector<std::string>> ids(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        ids[i].reserve(static_cast<std::size_t>(variants));
        for (int v = 0; v < variants; ++v) {
            std::ostringstream os;
            os << "s2-" << std::setw(6) << std::setfill('0')
               << i * static_cast<std::size_t>(variants) + static_cast<std::size_t>(v) + 1;
            ids[i].push_back(os.str());
        }
    }

    std::vector<std::vector<checkpoint::Stage2Row>> per_seed(kept.size());
    const auto workers = static_cast<std::size_t>(cfg_.backend.max_in_flight);
    llm::parallel_for_index(kept.size(), workers, [&](std::size_t i) {
        auto candidates = rephrase_seed(kept[i], ids[i], *gateway_, cfg_.stage2, &drops);
        for (auto& candidate : candidates) {
            auto refined =
                refine_candidate(kept[i], std::move(candidate), cfg_.stage2, *gateway_, &drops);
            per_seed[i].push_back({std::move(refined.candidate), std::move(refined.trace)});
        }
    });

    std::vector<json> rows;
    for (const auto& group : per_seed)
        for (const auto& row : group) rows.push_back(checkpoint::to_json(row));
    checkpoint::write_jsonl(stage_checkpoint(2), rows);
    drops.write(drops_file(2));
    record_stage(2, {});
}

void PipelineRunner::run_stage3() {
    if (!std::filesystem::exists(stage_checkpoint(1)) ||
        !std::filesystem::exists(stage_checkpoint(2)))
        throw StageError("solve requires the filter and forge checkpoints");

    std::unordered_map<std::string, Source> seed_sources;
    std::vector<SolveTask> tasks;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(1))) {
        const auto row = checkpoint::stage1_row_from_json(row_json);
        seed_sources[row.seed.id] = row.seed.source;
        if (row.kept) tasks.push_back({row.seed.id, row.seed.text, row.seed.flavor()});
    }
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(2))) {
        const auto row = checkpoint::stage2_row_from_json(row_json);
        if (row.candidate.status != CandidateStatus::accepted) continue;
        const auto src = seed_sources.find(row.candidate.parent_id);
        if (src == seed_sources.end())
            throw StageError("candidate " + row.candidate.id + " has unknown parent " +
                             row.candidate.parent_id);
        // Synthesized questions inherit the exemplar of their seed lineage.
        tasks.push_back({row.candidate.id, row.candidate.text, flavor_for(src->second)});
    }

    DropLog drops;
    const auto report = solve_corpus(tasks, *gateway_, cfg_.samples_per_question, &drops);

    std::vector<json> rows;
    rows.reserve(report.records.size());
    for (const auto& record : report.records) rows.push_back(checkpoint::to_json(record));
    checkpoint::write_jsonl(stage_checkpoint(3), rows);
    drops.write(drops_file(3));
    record_stage(3, {{"failures", report.failures}});
}

void PipelineRunner::run_stage4() {
    if (!std::filesystem::exists(stage_checkpoint(2)) ||
        !std::filesystem::exists(stage_checkpoint(3)))
        throw StageError("select requires the forge and solve checkpoints");

    std::unordered_map<std::string, SolutionRecord> sample0;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(3))) {
        const auto record = checkpoint::solution_from_json(row_json);
        if (record.sample_index == 0) sample0.emplace(record.question_id, record);
    }

    DropLog drops;
    std::vector<PairCandidate> pairs;
    std::size_t counter = 0;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(2))) {
        const auto row = checkpoint::stage2_row_from_json(row_json);
        if (row.candidate.status != CandidateStatus::accepted) continue;
        const auto sol = sample0.find(row.candidate.id);
        if (sol == sample0.end()) continue;  // solver already logged the gap
        PairCandidate pair;
        ++counter;
        std::ostringstream os;
        os << "s4-" << std::setw(6) << std::setfill('0') << counter;
        pair.pair_id = os.str();
        pair.question_id = row.candidate.id;
        pair.sample_index = 0;
        pair.question = row.candidate.text;
        pair.solution = format_solution(sol->second);
        pairs.push_back(std::move(pair));
    }

    auto maybe_scores = score_pairs(pairs, *gateway_, &drops);

    std::vector<std::size_t> scored_idx;
    std::vector<double> means;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!maybe_scores[i]) continue;
        scored_idx.push_back(i);
        means.push_back(maybe_scores[i]->mean);
    }

    json transition_diag;
    std::vector<double> curated = means;
    std::vector<EmbeddingVector> embeddings;
    if (scored_idx.size() >= 2) {
        std::vector<std::string> texts;
        texts.reserve(scored_idx.size());
        for (std::size_t i : scored_idx) texts.push_back(pairs[i].question);
        embeddings = gateway_->embed(texts);
        const auto index = curation::build_knn(embeddings, cfg_.curation.k);
        curated = curation::curate(
            means, index, {cfg_.curation.deviation_threshold, cfg_.curation.min_agreement});
        std::vector<double> snapped;
        snapped.reserve(means.size());
        for (double m : means) snapped.push_back(curation::snap_to_levels(m));
        transition_diag = transition_to_json(curation::estimate_transition(snapped, index));
    } else if (scored_idx.size() == 1) {
        embeddings = gateway_->embed({pairs[scored_idx[0]].question});
    }

    std::vector<SelectionItem> items;
    items.reserve(scored_idx.size());
    for (std::size_t n = 0; n < scored_idx.size(); ++n) {
        items.push_back({pairs[scored_idx[n]].pair_id,
                         score_level(curated[n], cfg_.stage4.level_granularity),
                         n < embeddings.size() ? embeddings[n] : EmbeddingVector{}});
    }
    const auto selection =
        select_diverse(items, static_cast<std::size_t>(cfg_.stage4.target_count));

    std::vector<int> rank(scored_idx.size(), -1);
    for (std::size_t r = 0; r < selection.size(); ++r) rank[selection[r]] = static_cast<int>(r);

    std::vector<json> rows;
    rows.reserve(scored_idx.size());
    for (std::size_t n = 0; n < scored_idx.size(); ++n) {
        const auto& pair = pairs[scored_idx[n]];
        checkpoint::Stage4Row row;
        row.pair_id = pair.pair_id;
        row.question_id = pair.question_id;
        row.sample_index = pair.sample_index;
        row.score = *maybe_scores[scored_idx[n]];
        row.score.curated = curated[n];
        row.level = items[n].level;
        row.selected = rank[n] >= 0;
        row.selection_rank = rank[n];
        rows.push_back(checkpoint::to_json(row));
    }
    checkpoint::write_jsonl(stage_checkpoint(4), rows);
    drops.write(drops_file(4));
    record_stage(4, transition_diag);
}

void PipelineRunner::run_assemble() {
    for (int stage : {1, 2, 3, 4})
        if (!std::filesystem::exists(stage_checkpoint(stage)))
            throw StageError("assemble requires all four stage checkpoints");

    std::unordered_map<std::string, SeedProblem> seeds;
    std::vector<std::string> kept_order;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(1))) {
        const auto row = checkpoint::stage1_row_from_json(row_json);
        seeds.emplace(row.seed.id, row.seed);
        if (row.kept) kept_order.push_back(row.seed.id);
    }

    std::unordered_map<std::string, RephrasedProblem> candidates;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(2))) {
        const auto row = checkpoint::stage2_row_from_json(row_json);
        candidates.emplace(row.candidate.id, row.candidate);
    }

    std::map<std::string, std::vector<SolutionRecord>> solutions;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(3)))
        solutions[checkpoint::solution_from_json(row_json).question_id].push_back(
            checkpoint::solution_from_json(row_json));
    for (auto& [qid, list] : solutions) {
        (void)qid;
        std::sort(list.begin(), list.end(),
                  [](const SolutionRecord& a, const SolutionRecord& b) {
                      return a.sample_index < b.sample_index;
                  });
    }

    std::vector<checkpoint::Stage4Row> selected_rows;
    for (const auto& row_json : checkpoint::read_jsonl(stage_checkpoint(4))) {
        auto row = checkpoint::stage4_row_from_json(row_json);
        if (row.selected) selected_rows.push_back(std::move(row));
    }
    std::sort(selected_rows.begin(), selected_rows.end(),
              [](const checkpoint::Stage4Row& a, const checkpoint::Stage4Row& b) {
                  return a.selection_rank < b.selection_rank;
              });

    DropLog drops;

    std::vector<TrainingPair> seed_pairs;
    for (const auto& seed_id : kept_order) {
        const auto sol = solutions.find(seed_id);
        if (sol == solutions.end() || sol->second.empty() ||
            sol->second.front().sample_index != 0)
            continue;  // stage 3 logged the missing solution
        TrainingPair pair;
        pair.question = seeds.at(seed_id).text;
        pair.solution = format_solution(sol->second.front());
        pair.origin = Origin::seed;
        pair.lineage = {seed_id};
        pair.sample_index = 0;
        seed_pairs.push_back(std::move(pair));
    }

    std::vector<TrainingPair> selected_pairs;
    for (const auto& row : selected_rows) {
        const auto cand = candidates.find(row.question_id);
        const auto sol = solutions.find(row.question_id);
        if (cand == candidates.end() || sol == solutions.end() || sol->second.empty() ||
            sol->second.front().sample_index != 0)
            continue;
        TrainingPair pair;
        pair.question = cand->second.text;
        pair.solution = format_solution(sol->second.front());
        pair.origin = Origin::synthesized;
        pair.lineage = {row.question_id, cand->second.parent_id};
        pair.sample_index = 0;
        selected_pairs.push_back(std::move(pair));
    }

    IdAllocator pair_ids("tp");
    auto dataset = assemble(selected_pairs, seed_pairs, cfg_.rng_seed, pair_ids, &drops);
    if (cfg_.scale_factor > 1)
        dataset = scale_dataset(dataset, cfg_.scale_factor, solutions, cfg_.scale_mode,
                                pair_ids, &drops);

    json manifest_fields{
        {"config_fingerprint", config_fingerprint(cfg_)},
        {"rng_seed", cfg_.rng_seed},
        {"scale_factor", cfg_.scale_factor},
        {"scale_mode", to_string(cfg_.scale_mode)},
        {"stage_checksums",
         {{"stage1", file_checksum(stage_checkpoint(1))},
          {"stage2", file_checksum(stage_checkpoint(2))},
          {"stage3", file_checksum(stage_checkpoint(3))},
          {"stage4", file_checksum(stage_checkpoint(4))}}}};
    export_dataset(dataset, cfg_.paths.output, std::move(manifest_fields));
    drops.write(drops_file(5));
}

}  // namespace mathforge
