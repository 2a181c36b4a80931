// Command-line front end: stage subcommands plus `run` for the whole
// pipeline. Exit codes: 0 success, 2 configuration error, 3 stage failure,
// 4 lock contention.

#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "mathforge/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitLock = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent math training-data synthesis pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string workdir_override;
    std::string backend_override;
    std::string output_override;
    bool resume = false;
    double tau = -1.0;
    int scale_factor = 0;
    std::int64_t rng_seed = -1;

    app.add_option("--config", config_path, "Path to the JSON config file")->required();
    app.add_option("--workdir", workdir_override, "Override paths.workdir");
    app.add_option("--output", output_override, "Override paths.output");
    app.add_option("--backend", backend_override, "Override backend mode: live|replay|mock");
    app.add_flag("--resume", resume, "Skip stages with a valid existing checkpoint");
    app.add_option("--tau", tau, "Override the stage-1 quality threshold (0-5)");
    app.add_option("--scale-factor", scale_factor, "Override the dataset scale factor");
    app.add_option("--seed", rng_seed, "Override the shuffle RNG seed");

    auto* cmd_filter = app.add_subcommand("filter", "Stage 1: score and filter seed problems");
    auto* cmd_forge = app.add_subcommand("forge", "Stage 2: rephrase and review-revise");
    auto* cmd_solve = app.add_subcommand("solve", "Stage 3: generate chain-of-thought solutions");
    auto* cmd_select = app.add_subcommand("select", "Stage 4: score pairs and select diverse subset");
    auto* cmd_assemble = app.add_subcommand("assemble", "Union, dedup, scale, and export");
    auto* cmd_run = app.add_subcommand("run", "Run all stages in order");

    CLI11_PARSE(app, argc, argv);

    try {
        mathforge::PipelineConfig cfg = mathforge::load_config(config_path);
        if (!workdir_override.empty()) cfg.paths.workdir = workdir_override;
        if (!output_override.empty()) cfg.paths.output = output_override;
        if (!backend_override.empty())
            cfg.backend.mode = mathforge::llm::backend_mode_from_string(backend_override);
        if (tau >= 0.0) cfg.stage1.tau = tau;
        if (scale_factor > 0) cfg.scale_factor = scale_factor;
        if (rng_seed >= 0) cfg.rng_seed = static_cast<std::uint64_t>(rng_seed);

        mathforge::RunOptions options;
        options.resume = resume;
        if (cmd_run->parsed()) {
            options = mathforge::all_stages();
            options.resume = resume;
        } else if (cmd_filter->parsed()) {
            options.stages = {mathforge::PipelineStage::filter};
        } else if (cmd_forge->parsed()) {
            options.stages = {mathforge::PipelineStage::forge};
        } else if (cmd_solve->parsed()) {
            options.stages = {mathforge::PipelineStage::solve};
        } else if (cmd_select->parsed()) {
            options.stages = {mathforge::PipelineStage::select};
        } else if (cmd_assemble->parsed()) {
            options.stages = {mathforge::PipelineStage::assemble};
        }

        mathforge::PipelineRunner runner(std::move(cfg));
        runner.run(options);
        return 0;
    } catch (const mathforge::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const mathforge::LockError& e) {
        std::cerr << "lock error: " << e.what() << '\n';
        return kExitLock;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStage;
    }
}
