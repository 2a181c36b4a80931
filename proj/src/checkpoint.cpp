#include "mathforge/checkpoint.hpp"

#include <fstream>

namespace mathforge::checkpoint {

using nlohmann::json;

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::vector<json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw IoError("malformed JSON at " + path.string() + ":" + std::to_string(lineno));
        rows.push_back(std::move(j));
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        for (const auto& row : rows) out << row.dump() << '\n';
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write to " + tmp.string() + " failed");
        }
    }
    std::filesystem::rename(tmp, path);
}

json to_json(const Stage1Row& row) {
    return {{"id", row.seed.id},
            {"text", row.seed.text},
            {"source", to_string(row.seed.source)},
            {"scores",
             {{"c", row.report.complexity},
              {"v", row.report.info_value},
              {"p", row.report.clarity},
              {"overall_raw", row.report.overall_raw}}},
            {"s_bar", row.s_bar},
            {"s_tilde", row.s_tilde},
            {"kept", row.kept}};
}

Stage1Row stage1_row_from_json(const json& j) {
    Stage1Row row;
    row.seed.id = j.at("id").get<std::string>();
    row.seed.text = j.at("text").get<std::string>();
    row.seed.source = source_from_string(j.at("source").get<std::string>());
    const auto& scores = j.at("scores");
    row.report.complexity = scores.at("c").get<int>();
    row.report.info_value = scores.at("v").get<int>();
    row.report.clarity = scores.at("p").get<int>();
    row.report.overall_raw = scores.at("overall_raw").get<int>();
    row.report.overall_norm = row.report.overall_raw / 2.0;
    row.s_bar = j.at("s_bar").get<double>();
    row.s_tilde = j.at("s_tilde").get<double>();
    row.report.curated = row.s_tilde;
    row.kept = j.at("kept").get<bool>();
    return row;
}

namespace {

json trace_to_json(const LoopTrace& trace) {
    json events = json::array();
    for (const auto& e : trace.events) {
        json ev{{"kind", e.kind == LoopEvent::Kind::review ? "review" : "revise"},
                {"iteration", e.iteration}};
        if (e.score) ev["score"] = *e.score;
        events.push_back(std::move(ev));
    }
    json j{{"events", std::move(events)}};
    if (!trace.failure_reason.empty()) j["failure_reason"] = trace.failure_reason;
    return j;
}

LoopTrace trace_from_json(const json& j, const std::string& candidate_id,
                          CandidateStatus outcome) {
    LoopTrace trace;
    trace.candidate_id = candidate_id;
    trace.outcome = outcome;
    trace.failure_reason = j.value("failure_reason", std::string{});
    for (const auto& ev : j.at("events")) {
        LoopEvent e;
        e.kind = ev.at("kind").get<std::string>() == "review" ? LoopEvent::Kind::review
                                                              : LoopEvent::Kind::revise;
        e.iteration = ev.at("iteration").get<int>();
        if (ev.contains("score")) e.score = ev["score"].get<double>();
        trace.events.push_back(std::move(e));
    }
    return trace;
}

}  // namespace

json to_json(const Stage2Row& row) {
    return {{"id", row.candidate.id},
            {"parent_id", row.candidate.parent_id},
            {"variant_index", row.candidate.variant_index},
            {"text", row.candidate.text},
            {"trace", trace_to_json(row.trace)},
            {"outcome", to_string(row.candidate.status)}};
}

Stage2Row stage2_row_from_json(const json& j) {
    Stage2Row row;
    row.candidate.id = j.at("id").get<std::string>();
    row.candidate.parent_id = j.at("parent_id").get<std::string>();
    row.candidate.variant_index = j.at("variant_index").get<int>();
    row.candidate.text = j.at("text").get<std::string>();
    row.candidate.status = candidate_status_from_string(j.at("outcome").get<std::string>());
    row.trace = trace_from_json(j.at("trace"), row.candidate.id, row.candidate.status);
    row.candidate.revision_count = row.trace.revisions();
    return row;
}

json to_json(const SolutionRecord& record) {
    return {{"question_id", record.question_id},
            {"sample_index", record.sample_index},
            {"thought", record.thought},
            {"answer", record.answer}};
}

SolutionRecord solution_from_json(const json& j) {
    SolutionRecord record;
    record.question_id = j.at("question_id").get<std::string>();
    record.sample_index = j.at("sample_index").get<int>();
    record.thought = j.at("thought").get<std::string>();
    record.answer = j.at("answer").get<std::string>();
    return record;
}

json to_json(const Stage4Row& row) {
    return {{"pair_id", row.pair_id},
            {"question_id", row.question_id},
            {"sample_index", row.sample_index},
            {"scores",
             {{"clarity", row.score.clarity},
              {"correctness", row.score.correctness},
              {"completeness", row.score.completeness},
              {"mean", row.score.mean}}},
            {"curated", row.score.curated},
            {"level", row.level},
            {"selected", row.selected},
            {"selection_rank", row.selection_rank}};
}

Stage4Row stage4_row_from_json(const json& j) {
    Stage4Row row;
    row.pair_id = j.at("pair_id").get<std::string>();
    row.question_id = j.at("question_id").get<std::string>();
    row.sample_index = j.at("sample_index").get<int>();
    const auto& scores = j.at("scores");
    row.score.clarity = scores.at("clarity").get<int>();
    row.score.correctness = scores.at("correctness").get<int>();
    row.score.completeness = scores.at("completeness").get<int>();
    row.score.mean = scores.at("mean").get<double>();
    row.score.curated = j.at("curated").get<double>();
    row.level = j.at("level").get<int>();
    row.selected = j.at("selected").get<bool>();
    row.selection_rank = j.at("selection_rank").get<int>();
    return row;
}

}  // namespace mathforge::checkpoint
