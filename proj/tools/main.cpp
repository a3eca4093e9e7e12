// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"
#include "run_config.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <iostream>

namespace
{

std::atomic<bool> g_interrupted { false };

extern "C" void on_sigint(int)
{
    g_interrupted.store(true);
}

} // namespace

int main(int argc, char** argv)
{
    using namespace logrules::cli;

    spdlog::set_default_logger(spdlog::stderr_color_mt("logrules"));
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

    CLI::App app { "Synthesize and apply interpretable log anomaly rules" };
    app.require_subcommand(1);
    app.fallthrough();
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    auto synth = SynthesizeOptions {};
    auto* synth_cmd = app.add_subcommand("synthesize", "Build a rule database from a labeled corpus");
    synth_cmd->add_option("-c,--config", synth.config, "YAML run configuration");
    synth_cmd->add_option("--corpus", synth.corpus, "Labeled log file");
    synth_cmd->add_option("-o,--out", synth.output, "Rule database to write");
    synth_cmd->add_option("--backend", synth.backend, "mock or http")->check(CLI::IsMember({ "mock", "http" }));
    synth_cmd->add_option("--format", synth.format, "bgl_dash or two_column");
    synth_cmd->add_option("--window-size", synth.window_size);
    synth_cmd->add_option("--stride", synth.stride);
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--transcript", synth.transcript, "Write backend call log as JSONL");

    auto detect = DetectOptions {};
    auto* detect_cmd = app.add_subcommand("detect", "Classify windows of a log stream");
    detect_cmd->add_option("-d,--db", detect.database, "Rule database")->required();
    detect_cmd->add_option("input", detect.input, "Log file, or - for stdin");
    detect_cmd->add_option("-o,--out", detect.output, "JSONL output, default stdout");
    detect_cmd->add_option("--window-size", detect.window_size);
    detect_cmd->add_option("--stride", detect.stride);
    detect_cmd->add_option("--format", detect.format, "raw or bgl_dash")->check(CLI::IsMember({ "raw", "bgl_dash" }));

    auto evaluate = EvaluateOptions {};
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a rule database against a labeled corpus");
    eval_cmd->add_option("-d,--db", evaluate.database, "Rule database")->required();
    eval_cmd->add_option("--corpus", evaluate.corpus, "Labeled log file")->required();
    eval_cmd->add_option("--format", evaluate.format, "bgl_dash or two_column");
    eval_cmd->add_option("--split", evaluate.split, "test or all")->check(CLI::IsMember({ "test", "all" }));
    eval_cmd->add_option("--window-size", evaluate.window_size);
    eval_cmd->add_option("--stride", evaluate.stride);

    std::filesystem::path rules_db;
    std::string rules_action;
    std::string rule_name;
    auto* rules_cmd = app.add_subcommand("rules", "Inspect a rule database");
    rules_cmd->add_option("-d,--db", rules_db, "Rule database")->required();
    rules_cmd->add_option("action", rules_action, "list, show or stats")
        ->required()
        ->check(CLI::IsMember({ "list", "show", "stats" }));
    rules_cmd->add_option("name", rule_name, "Rule name for show");

    auto generate = GenerateOptions {};
    auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic labeled corpus");
    gen_cmd->add_option("--kind", generate.kind)->check(CLI::IsMember({ "planted", "dominant", "geometric" }));
    gen_cmd->add_option("--windows", generate.windows);
    gen_cmd->add_option("--window-size", generate.window_size);
    gen_cmd->add_option("--abnormal-fraction", generate.abnormal_fraction);
    gen_cmd->add_option("--minority-fraction", generate.minority_fraction);
    gen_cmd->add_option("--patterns", generate.patterns);
    gen_cmd->add_option("--seed", generate.seed);
    gen_cmd->add_option("-o,--out", generate.output)->required();

    auto* init_cmd = app.add_subcommand("init-config", "Print the default YAML configuration");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        auto const code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (verbose)
        spdlog::set_level(spdlog::level::debug);
    else if (quiet)
        spdlog::set_level(spdlog::level::warn);

    if (*synth_cmd)
    {
        std::signal(SIGINT, on_sigint);
        return cmd_synthesize(synth, &g_interrupted);
    }
    if (*detect_cmd)
        return cmd_detect(detect, std::cin, std::cout);
    if (*eval_cmd)
        return cmd_evaluate(evaluate, std::cout);
    if (*rules_cmd)
        return cmd_rules(rules_db, rules_action, rule_name, std::cout);
    if (*gen_cmd)
        return cmd_generate(generate);
    if (*init_cmd)
    {
        std::cout << default_config_yaml();
        return kExitOk;
    }
    return kExitUsage;
}
