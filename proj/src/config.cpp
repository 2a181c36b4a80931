#include "mathforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "mathforge/text.hpp"

namespace mathforge {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key))
            throw ConfigError("unknown config key '" + key + "' in " + where);
    }
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    reject_unknown_keys(j,
                        {"backend", "stage1", "stage2", "stage4", "curation", "paths",
                         "samples_per_question", "scale_factor", "scale_mode", "rng_seed"},
                        "config root");

    if (j.contains("backend")) {
        const auto& b = j["backend"];
        reject_unknown_keys(b,
                            {"mode", "endpoint_url", "model_name", "embed_model_name",
                             "api_key_env", "max_in_flight", "retry", "embed_dim",
                             "recordings_path"},
                            "backend");
        if (b.contains("mode"))
            cfg.backend.mode = llm::backend_mode_from_string(b["mode"].get<std::string>());
        cfg.backend.endpoint_url = b.value("endpoint_url", cfg.backend.endpoint_url);
        cfg.backend.model_name = b.value("model_name", cfg.backend.model_name);
        cfg.backend.embed_model_name = b.value("embed_model_name", cfg.backend.embed_model_name);
        cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
        cfg.backend.max_in_flight = b.value("max_in_flight", cfg.backend.max_in_flight);
        cfg.backend.embed_dim = b.value("embed_dim", cfg.backend.embed_dim);
        cfg.backend.recordings_path = b.value("recordings_path", cfg.backend.recordings_path);
        if (b.contains("retry")) {
            reject_unknown_keys(b["retry"], {"max_attempts", "base_backoff_ms"}, "backend.retry");
            cfg.backend.retry.max_attempts =
                b["retry"].value("max_attempts", cfg.backend.retry.max_attempts);
            cfg.backend.retry.base_backoff = std::chrono::milliseconds(
                b["retry"].value("base_backoff_ms",
                                 static_cast<int>(cfg.backend.retry.base_backoff.count())));
        }
    }
    if (j.contains("stage1")) {
        const auto& s = j["stage1"];
        reject_unknown_keys(s, {"tau", "aggregate"}, "stage1");
        cfg.stage1.tau = s.value("tau", cfg.stage1.tau);
        if (s.contains("aggregate"))
            cfg.stage1.aggregate = aggregate_from_string(s["aggregate"].get<std::string>());
    }
    if (j.contains("stage2")) {
        const auto& s = j["stage2"];
        reject_unknown_keys(s, {"variants_per_seed", "tau_rev", "max_iterations"}, "stage2");
        cfg.stage2.variants_per_seed = s.value("variants_per_seed", cfg.stage2.variants_per_seed);
        cfg.stage2.tau_rev = s.value("tau_rev", cfg.stage2.tau_rev);
        cfg.stage2.max_iterations = s.value("max_iterations", cfg.stage2.max_iterations);
    }
    if (j.contains("stage4")) {
        const auto& s = j["stage4"];
        reject_unknown_keys(s, {"target_count", "level_granularity"}, "stage4");
        cfg.stage4.target_count = s.value("target_count", cfg.stage4.target_count);
        cfg.stage4.level_granularity =
            s.value("level_granularity", cfg.stage4.level_granularity);
    }
    if (j.contains("curation")) {
        const auto& c = j["curation"];
        reject_unknown_keys(c, {"k", "deviation_threshold", "min_agreement"}, "curation");
        cfg.curation.k = c.value("k", cfg.curation.k);
        cfg.curation.deviation_threshold =
            c.value("deviation_threshold", cfg.curation.deviation_threshold);
        cfg.curation.min_agreement = c.value("min_agreement", cfg.curation.min_agreement);
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        reject_unknown_keys(p, {"seeds_gsm8k", "seeds_math", "workdir", "output"}, "paths");
        cfg.paths.seeds_gsm8k = p.value("seeds_gsm8k", cfg.paths.seeds_gsm8k);
        cfg.paths.seeds_math = p.value("seeds_math", cfg.paths.seeds_math);
        cfg.paths.workdir = p.value("workdir", cfg.paths.workdir);
        cfg.paths.output = p.value("output", cfg.paths.output);
    }
    cfg.samples_per_question = j.value("samples_per_question", cfg.samples_per_question);
    cfg.scale_factor = j.value("scale_factor", cfg.scale_factor);
    if (j.contains("scale_mode"))
        cfg.scale_mode = scale_mode_from_string(j["scale_mode"].get<std::string>());
    cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    return config_from_json(j);
}

json to_json(const PipelineConfig& cfg) {
    return {
        {"backend",
         {{"mode", llm::to_string(cfg.backend.mode)},
          {"endpoint_url", cfg.backend.endpoint_url},
          {"model_name", cfg.backend.model_name},
          {"embed_model_name", cfg.backend.embed_model_name},
          {"api_key_env", cfg.backend.api_key_env},
          {"max_in_flight", cfg.backend.max_in_flight},
          {"embed_dim", cfg.backend.embed_dim},
          {"recordings_path", cfg.backend.recordings_path},
          {"retry",
           {{"max_attempts", cfg.backend.retry.max_attempts},
            {"base_backoff_ms", static_cast<int>(cfg.backend.retry.base_backoff.count())}}}}},
        {"stage1", {{"tau", cfg.stage1.tau}, {"aggregate", to_string(cfg.stage1.aggregate)}}},
        {"stage2",
         {{"variants_per_seed", cfg.stage2.variants_per_seed},
          {"tau_rev", cfg.stage2.tau_rev},
          {"max_iterations", cfg.stage2.max_iterations}}},
        {"stage4",
         {{"target_count", cfg.stage4.target_count},
          {"level_granularity", cfg.stage4.level_granularity}}},
        {"curation",
         {{"k", cfg.curation.k},
          {"deviation_threshold", cfg.curation.deviation_threshold},
          {"min_agreement", cfg.curation.min_agreement}}},
        {"paths",
         {{"seeds_gsm8k", cfg.paths.seeds_gsm8k},
          {"seeds_math", cfg.paths.seeds_math},
          {"workdir", cfg.paths.workdir},
          {"output", cfg.paths.output}}},
        {"samples_per_question", cfg.samples_per_question},
        {"scale_factor", cfg.scale_factor},
        {"scale_mode", to_string(cfg.scale_mode)},
        {"rng_seed", cfg.rng_seed},
    };
}

void validate(const PipelineConfig& cfg) {
    std::vector<std::string> problems;
    auto check = [&](bool ok, const std::string& message) {
        if (!ok) problems.push_back(message);
    };

    check(cfg.backend.max_in_flight >= 1, "backend.max_in_flight must be at least 1");
    check(cfg.backend.retry.max_attempts >= 1, "backend.retry.max_attempts must be at least 1");
    check(cfg.backend.retry.base_backoff.count() >= 0,
          "backend.retry.base_backoff_ms must be non-negative");
    check(cfg.backend.embed_dim >= 1, "backend.embed_dim must be at least 1");
    if (cfg.backend.mode == llm::BackendMode::live) {
        check(!cfg.backend.endpoint_url.empty(), "live mode requires backend.endpoint_url");
        const char* key = std::getenv(cfg.backend.api_key_env.c_str());
        check(key != nullptr && *key != '\0',
              "live mode requires the environment variable " + cfg.backend.api_key_env);
    }
    if (cfg.backend.mode == llm::BackendMode::replay) {
        check(!cfg.backend.recordings_path.empty(),
              "replay mode requires backend.recordings_path");
        if (!cfg.backend.recordings_path.empty())
            check(std::filesystem::exists(cfg.backend.recordings_path),
                  "recordings file does not exist: " + cfg.backend.recordings_path);
    }

    check(cfg.stage1.tau >= 0.0 && cfg.stage1.tau <= 5.0, "stage1.tau must be within [0,5]");
    check(cfg.stage2.variants_per_seed >= 1, "stage2.variants_per_seed must be at least 1");
    check(cfg.stage2.tau_rev > 1.0 && cfg.stage2.tau_rev <= 5.0,
          "stage2.tau_rev must be within (1,5]");
    check(cfg.stage2.max_iterations >= 0, "stage2.max_iterations must be non-negative");
    check(cfg.stage4.target_count >= 1, "stage4.target_count must be at least 1");
    check(cfg.stage4.level_granularity > 0.0, "stage4.level_granularity must be positive");
    check(cfg.curation.k >= 1, "curation.k must be at least 1");
    check(cfg.curation.deviation_threshold >= 0.0,
          "curation.deviation_threshold must be non-negative");
    check(cfg.curation.min_agreement >= 0, "curation.min_agreement must be non-negative");
    check(cfg.samples_per_question >= 1, "samples_per_question must be at least 1");
    check(cfg.scale_factor >= 1, "scale_factor must be at least 1");

    check(!cfg.paths.seeds_gsm8k.empty(), "paths.seeds_gsm8k is required");
    check(!cfg.paths.seeds_math.empty(), "paths.seeds_math is required");
    if (!cfg.paths.seeds_gsm8k.empty())
        check(std::filesystem::exists(cfg.paths.seeds_gsm8k),
              "seed file does not exist: " + cfg.paths.seeds_gsm8k);
    if (!cfg.paths.seeds_math.empty())
        check(std::filesystem::exists(cfg.paths.seeds_math),
              "seed file does not exist: " + cfg.paths.seeds_math);
    check(!cfg.paths.workdir.empty(), "paths.workdir is required");
    check(!cfg.paths.output.empty(), "paths.output is required");
    if (!cfg.paths.output.empty()) {
        // Creatable means the deepest existing ancestor is a directory.
        std::filesystem::path probe = std::filesystem::path(cfg.paths.output).parent_path();
        while (!probe.empty() && !std::filesystem::exists(probe)) probe = probe.parent_path();
        check(probe.empty() || std::filesystem::is_directory(probe),
              "output parent is not creatable: " + cfg.paths.output);
    }

    if (!problems.empty()) {
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& p : problems) os << "\n  - " << p;
        throw ConfigError(os.str());
    }
}

std::string config_fingerprint(const PipelineConfig& cfg) {
    return digest_hex(to_json(cfg).dump());
}

json stage_subset(const PipelineConfig& cfg, int stage) {
    const json full = to_json(cfg);
    switch (stage) {
        case 1:
            return {{"seeds_gsm8k", cfg.paths.seeds_gsm8k},
                    {"seeds_math", cfg.paths.seeds_math},
                    {"model_name", cfg.backend.model_name},
                    {"embed_model_name", cfg.backend.embed_model_name},
                    {"embed_dim", cfg.backend.embed_dim},
                    {"stage1", full["stage1"]},
                    {"curation", full["curation"]}};
        case 2:
            return {{"stage2", full["stage2"]}};
        case 3:
            return {{"samples_per_question", cfg.samples_per_question}};
        case 4:
            return {{"stage4", full["stage4"]},
                    {"curation", full["curation"]},
                    {"embed_model_name", cfg.backend.embed_model_name},
                    {"embed_dim", cfg.backend.embed_dim}};
        default:
            throw std::invalid_argument("stage_subset: stage must be 1..4");
    }
}

std::string stage_fingerprint(const PipelineConfig& cfg, int stage) {
    std::string chained;
    for (int s = 1; s <= stage; ++s) chained = digest_hex(chained + stage_subset(cfg, s).dump());
    return chained;
}

}  // namespace mathforge
