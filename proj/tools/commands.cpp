// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"
#include "run_config.hpp"

#include <logrules/detector.hpp>
#include <logrules/epochs.hpp>
#include <logrules/planted.hpp>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>

namespace logrules::cli
{

namespace
{

std::unique_ptr<LlmBackend> make_backend(const RunConfig& config)
{
    if (config.backend == BackendKind::Mock)
        return std::make_unique<MockBackend>();
    if (!config.http.api_key_env.empty() && std::getenv(config.http.api_key_env.c_str()) == nullptr)
        spdlog::warn("environment variable {} is not set; requests are sent without credentials",
                     config.http.api_key_env);
    return std::make_unique<HttpBackend>(config.http);
}

Dataset load_dataset(const std::filesystem::path& path, LabelFormat format, std::size_t window_size,
                     std::size_t stride)
{
    auto const lines = load_corpus(path, format);
    return split_dataset(make_windows(lines, window_size, stride));
}

} // namespace

int cmd_synthesize(const SynthesizeOptions& options, const std::atomic<bool>* cancel)
{
    auto config = RunConfig {};
    try
    {
        if (options.config)
            config = load_run_config(*options.config);
        if (options.corpus)
            config.corpus.path = *options.corpus;
        if (options.output)
            config.output = *options.output;
        if (options.format)
            config.corpus.format = parse_label_format(*options.format);
        if (options.window_size)
            config.corpus.window_size = *options.window_size;
        if (options.stride)
            config.corpus.stride = *options.stride;
        if (options.seed)
            config.synthesis.seed = *options.seed;
        if (options.transcript)
            config.transcript = *options.transcript;
        if (options.backend)
        {
            if (*options.backend == "mock")
                config.backend = BackendKind::Mock;
            else if (*options.backend == "http")
                config.backend = BackendKind::Http;
            else
                throw ConfigError("backend must be mock or http");
        }
        if (config.corpus.path.empty())
            throw ConfigError("no corpus given");
        if (config.output.empty())
            throw ConfigError("no output database path given");
        validate(config);
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitUsage;
    }

    auto dataset = Dataset {};
    try
    {
        dataset = load_dataset(config.corpus.path, config.corpus.format, config.corpus.window_size,
                               config.corpus.effective_stride());
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitUsage;
    }
    spdlog::info("corpus {}: {} windows ({} train, {} validation, {} test)", config.corpus.path.string(),
                 dataset.windows.size(), dataset.count(Split::Train), dataset.count(Split::Validation),
                 dataset.count(Split::Test));

    auto prompts = std::optional<PromptLibrary> {};
    if (config.prompt_dir)
        prompts = PromptLibrary::with_overrides(*config.prompt_dir);

    auto backend = make_backend(config);
    auto transcript = Transcript {};
    auto const window_size = config.corpus.window_size;
    auto const stride = config.corpus.effective_stride();

    auto persist = [&](RuleDatabase db) {
        db.window_size = window_size;
        db.stride = stride;
        save_database(db, config.output);
    };

    auto hooks = SynthesisHooks {};
    hooks.cancel = cancel;
    hooks.transcript = &transcript;
    hooks.prompts = prompts ? &*prompts : nullptr;
    hooks.on_checkpoint = [&](const RuleDatabase& db) { persist(db); };
    hooks.on_epoch = [](const EpochReport& report) {
        auto record = nlohmann::ordered_json {
            { "epoch", report.epoch },
            { "phase", to_string(report.phase) },
            { "coverage", report.coverage },
            { "normal_rules", report.normal_rules },
            { "abnormal_rules", report.abnormal_rules },
            { "accepted", report.accepted },
        };
        spdlog::info("progress {}", record.dump());
    };

    auto db = RuleDatabase {};
    try
    {
        db = run_synthesis(dataset, *backend, config.synthesis, hooks);
        persist(db);
    }
    catch (const std::exception& e)
    {
        spdlog::error("synthesis failed: {}", e.what());
        return kExitFailure;
    }

    if (config.transcript)
    {
        auto out = std::ofstream(*config.transcript, std::ios::binary | std::ios::trunc);
        transcript.write_jsonl(out);
    }
    auto const usage = backend->usage();
    spdlog::info("wrote {} normal and {} abnormal rules to {} (tokens in {}, out {})", db.normal_rules.size(),
                 db.abnormal_rules.size(), config.output.string(), usage.input, usage.output);

    if (db.partial)
        return cancel != nullptr && cancel->load() ? kExitInterrupted : kExitBackend;
    return kExitOk;
}

int cmd_detect(const DetectOptions& options, std::istream& in, std::ostream& out)
{
    auto db = RuleDatabase {};
    auto format = LineFormat::Raw;
    try
    {
        db = load_database(options.database);
        if (options.format == "bgl_dash")
            format = LineFormat::BglDash;
        else if (options.format != "raw")
            throw ConfigError("format must be raw or bgl_dash");
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitUsage;
    }
    auto const window_size = options.window_size.value_or(db.window_size);
    auto const stride = options.stride.value_or(options.window_size ? window_size : db.stride);
    if (window_size == 0 || stride == 0)
    {
        spdlog::error("window size and stride must be positive");
        return kExitUsage;
    }

    auto file_in = std::ifstream {};
    auto* source = &in;
    if (options.input && options.input->string() != "-")
    {
        file_in.open(*options.input, std::ios::binary);
        if (!file_in)
        {
            spdlog::error("cannot open {}", options.input->string());
            return kExitUsage;
        }
        source = &file_in;
    }
    auto file_out = std::ofstream {};
    auto* sink = &out;
    if (options.output && options.output->string() != "-")
    {
        file_out.open(*options.output, std::ios::binary | std::ios::trunc);
        if (!file_out)
        {
            spdlog::error("cannot write {}", options.output->string());
            return kExitUsage;
        }
        sink = &file_out;
    }

    auto const detector = Detector(std::move(db));
    try
    {
        auto const count = detect_stream(
            detector, *source, window_size, stride,
            [&](const DetectionResult& result) { *sink << to_json_line(result) << '\n'; }, format);
        sink->flush();
        spdlog::debug("classified {} windows", count);
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out)
{
    auto db = RuleDatabase {};
    auto dataset = Dataset {};
    try
    {
        if (options.split != "test" && options.split != "all")
            throw ConfigError("split must be test or all");
        db = load_database(options.database);
        auto const window_size = options.window_size.value_or(db.window_size);
        auto const stride = options.stride.value_or(options.window_size ? window_size : db.stride);
        dataset = load_dataset(options.corpus, parse_label_format(options.format), window_size, stride);
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitUsage;
    }

    auto const detector = Detector(std::move(db));
    auto results = std::vector<DetectionResult> {};
    auto truth = std::vector<GroundTruth> {};
    for (std::size_t i = 0; i < dataset.windows.size(); ++i)
    {
        if (options.split == "test" && dataset.split[i] != Split::Test)
            continue;
        auto const& window = dataset.windows[i];
        results.push_back(detector.classify(window));
        truth.push_back({ window.id, window.label });
    }
    out << to_json(compute_metrics(results, truth)) << '\n';
    return kExitOk;
}

int cmd_rules(const std::filesystem::path& database, const std::string& action, const std::string& name,
              std::ostream& out)
{
    auto db = RuleDatabase {};
    try
    {
        db = load_database(database);
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitUsage;
    }

    if (action == "list")
    {
        for (auto kind: { Label::Normal, Label::Abnormal })
            for (auto const& stored: db.rules(kind))
                out << fmt::format("{}\t{}\t{}\t{}\n", to_string(kind), stored.rule.name,
                                   atom_count(*stored.rule.ast), stored.rule.docstring);
        return kExitOk;
    }
    if (action == "show")
    {
        auto const* stored = db.find(name);
        if (stored == nullptr)
        {
            spdlog::error("no rule named '{}'", name);
            return kExitUsage;
        }
        out << "# " << stored->rule.docstring << '\n' << pretty_print(stored->rule) << '\n';
        return kExitOk;
    }
    if (action == "stats")
    {
        auto histogram = std::map<std::string, std::size_t> {};
        for (auto type: { SubruleType::Keyword, SubruleType::EventCount, SubruleType::NewPattern,
                          SubruleType::Sequence, SubruleType::Variables, SubruleType::Threshold,
                          SubruleType::Composition, SubruleType::Other })
            histogram[std::string(to_string(type))] = 0;
        std::size_t atoms = 0;
        std::size_t subrules = 0;
        auto const total = db.normal_rules.size() + db.abnormal_rules.size();
        for (auto kind: { Label::Normal, Label::Abnormal })
            for (auto const& stored: db.rules(kind))
            {
                atoms += atom_count(*stored.rule.ast);
                auto const types = classify_subrules(stored.rule);
                subrules += types.size();
                for (auto type: types)
                    ++histogram[std::string(to_string(type))];
            }
        auto mean = [&](std::size_t sum) { return total == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(total); };
        auto record = nlohmann::ordered_json {
            { "normal_rules", db.normal_rules.size() },
            { "abnormal_rules", db.abnormal_rules.size() },
            { "avg_atoms", mean(atoms) },
            { "avg_subrules", mean(subrules) },
            { "subrule_types", histogram },
        };
        out << record.dump(2) << '\n';
        return kExitOk;
    }
    spdlog::error("unknown rules action '{}'", action);
    return kExitUsage;
}

int cmd_generate(const GenerateOptions& options)
{
    auto corpus = SyntheticCorpus {};
    try
    {
        auto const planted = PlantedOptions { .windows = options.windows,
                                              .window_size = options.window_size,
                                              .abnormal_fraction = options.abnormal_fraction,
                                              .seed = options.seed };
        if (options.kind == "planted")
            corpus = planted_corpus(planted);
        else if (options.kind == "dominant")
            corpus = dominant_pattern_corpus(planted, options.minority_fraction);
        else if (options.kind == "geometric")
            corpus = geometric_corpus(planted, options.patterns);
        else
            throw ConfigError("kind must be planted, dominant or geometric");
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitUsage;
    }
    auto out = std::ofstream(options.output, std::ios::binary | std::ios::trunc);
    if (!out)
    {
        spdlog::error("cannot write {}", options.output.string());
        return kExitUsage;
    }
    write_bgl_dash(out, corpus.lines);
    return out ? kExitOk : kExitFailure;
}

} // namespace logrules::cli
