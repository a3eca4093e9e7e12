// SPDX-License-Identifier: Apache-2.0
#include "run_config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace logrules::cli
{

namespace
{

std::string where(const YAML::Node& node)
{
    auto const mark = node.Mark();
    if (mark.is_null())
        return {};
    return fmt::format(" (line {}, column {})", mark.line + 1, mark.column + 1);
}

std::string scalar(const YAML::Node& node, std::string_view key)
{
    if (!node.IsScalar())
        throw ConfigError(fmt::format("{} must be a scalar{}", key, where(node)));
    return node.Scalar();
}

template <typename T>
void read_value(const YAML::Node& node, std::string_view key, T& out)
{
    auto const text = scalar(node, key);
    if constexpr (std::is_same_v<T, bool>)
    {
        if (text == "true")
            out = true;
        else if (text == "false")
            out = false;
        else
            throw ConfigError(fmt::format("{} must be true or false, got '{}'{}", key, text, where(node)));
    }
    else
    {
        T value {};
        auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc {} || ptr != text.data() + text.size())
            throw ConfigError(fmt::format("{} has an invalid value '{}'{}", key, text, where(node)));
        out = value;
    }
}

void read_value(const YAML::Node& node, std::string_view key, std::string& out)
{
    out = scalar(node, key);
}

void read_value(const YAML::Node& node, std::string_view key, std::filesystem::path& out)
{
    out = scalar(node, key);
}

void expect_map(const YAML::Node& node, std::string_view key)
{
    if (!node.IsMap())
        throw ConfigError(fmt::format("{} must be a mapping{}", key, where(node)));
}

/// Walks a mapping, dispatching each key and rejecting unknown ones.
template <typename Handler>
void for_each_entry(const YAML::Node& map, std::string_view section, Handler&& handle)
{
    for (auto const& entry: map)
    {
        auto const key = entry.first.as<std::string>();
        if (!handle(key, entry.second))
        {
            auto const qualified = section.empty() ? key : fmt::format("{}.{}", section, key);
            throw ConfigError(fmt::format("unknown configuration key '{}'{}", qualified, where(entry.first)));
        }
    }
}

bool read_synthesis_field(SynthesisConfig& config, const std::string& key, const YAML::Node& value)
{
    bool found = false;
    for_each_field(config, [&](const char* name, auto& field) {
        if (key == name)
        {
            read_value(value, key, field);
            found = true;
        }
    });
    return found;
}

void read_backend(RunConfig& config, const YAML::Node& node)
{
    expect_map(node, "backend");
    for_each_entry(node, "backend", [&](const std::string& key, const YAML::Node& value) {
        if (key == "kind")
        {
            auto const kind = scalar(value, "backend.kind");
            if (kind == "mock")
                config.backend = BackendKind::Mock;
            else if (kind == "http")
                config.backend = BackendKind::Http;
            else
                throw ConfigError(fmt::format("backend.kind must be mock or http, got '{}'{}", kind, where(value)));
        }
        else if (key == "endpoint")
            read_value(value, key, config.http.endpoint);
        else if (key == "model")
            read_value(value, key, config.http.model);
        else if (key == "api_key_env")
            read_value(value, key, config.http.api_key_env);
        else if (key == "timeout_ms" || key == "initial_backoff_ms")
        {
            std::int64_t ms = 0;
            read_value(value, key, ms);
            if (ms <= 0)
                throw ConfigError(fmt::format("backend.{} must be positive{}", key, where(value)));
            (key == "timeout_ms" ? config.http.timeout : config.http.initial_backoff) = std::chrono::milliseconds(ms);
        }
        else if (key == "max_retries")
            read_value(value, key, config.http.max_retries);
        else if (key == "send_temperature")
            read_value(value, key, config.http.send_temperature);
        else
            return false;
        return true;
    });
}

void read_corpus(RunConfig& config, const YAML::Node& node)
{
    expect_map(node, "corpus");
    for_each_entry(node, "corpus", [&](const std::string& key, const YAML::Node& value) {
        if (key == "path")
            read_value(value, key, config.corpus.path);
        else if (key == "format")
        {
            try
            {
                config.corpus.format = parse_label_format(scalar(value, "corpus.format"));
            }
            catch (const std::exception& e)
            {
                throw ConfigError(fmt::format("corpus.format: {}{}", e.what(), where(value)));
            }
        }
        else if (key == "window_size")
            read_value(value, key, config.corpus.window_size);
        else if (key == "stride")
            read_value(value, key, config.corpus.stride);
        else
            return false;
        return true;
    });
}

} // namespace

RunConfig parse_run_config(std::string_view yaml)
{
    auto root = YAML::Node {};
    try
    {
        root = YAML::Load(std::string(yaml));
    }
    catch (const YAML::Exception& e)
    {
        throw ConfigError(fmt::format("malformed configuration: {}", e.what()));
    }

    auto config = RunConfig {};
    if (root.IsNull())
        return config;
    expect_map(root, "configuration");
    try
    {
        for_each_entry(root, "", [&](const std::string& key, const YAML::Node& value) {
            if (key == "synthesis")
            {
                expect_map(value, "synthesis");
                for_each_entry(value, "synthesis", [&](const std::string& k, const YAML::Node& v) {
                    return read_synthesis_field(config.synthesis, k, v);
                });
            }
            else if (key == "backend")
                read_backend(config, value);
            else if (key == "corpus")
                read_corpus(config, value);
            else if (key == "output")
                read_value(value, key, config.output);
            else if (key == "transcript")
                config.transcript = scalar(value, key);
            else if (key == "prompt_dir")
                config.prompt_dir = scalar(value, key);
            else
                return false;
            return true;
        });
    }
    catch (const YAML::Exception& e)
    {
        throw ConfigError(fmt::format("invalid configuration: {}", e.what()));
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read configuration file " + path.string());
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

void validate(const RunConfig& config)
{
    try
    {
        logrules::validate(config.synthesis);
    }
    catch (const std::invalid_argument& e)
    {
        throw ConfigError(fmt::format("synthesis.{}", e.what()));
    }
    if (config.corpus.window_size == 0)
        throw ConfigError("corpus.window_size must be at least 1");
    if (config.backend == BackendKind::Http)
    {
        if (config.http.endpoint.find("://") == std::string::npos)
            throw ConfigError("backend.endpoint must be an absolute URL");
        if (config.http.model.empty())
            throw ConfigError("backend.model must not be empty");
    }
    if (config.prompt_dir && !std::filesystem::is_directory(*config.prompt_dir))
        throw ConfigError("prompt_dir is not a directory: " + config.prompt_dir->string());
}

std::string default_config_yaml()
{
    return R"(# logrules run configuration. Every key is optional; the values below are the defaults.

synthesis:
  group_size: 5                    # windows per side of a contrastive group
  line_top_k: 2                    # most frequent tokens kept per line
  window_token_scale: 0.5          # tokens kept per window = scale * average window length
  max_merge_iters: 4               # clustering passes with a relaxing overlap threshold
  anchor_similarity_normal: 0.2    # minimum Jaccard similarity to the anchor window
  anchor_similarity_abnormal: 0.2
  max_normal_rules: 200            # rule database capacity per kind
  max_abnormal_rules: 200
  coverage_stop_normal: 0.99       # stop a phase once this share of its windows is covered
  coverage_stop_abnormal: 0.995
  rollouts: 2                      # independent generation attempts per epoch
  generalization_normal: 0.8       # share of remaining windows a new rule must cover
  generalization_abnormal: 0.8
  max_repair_iters: 3
  max_refine_iters: 1
  epoch_budget: 500                # hard limit on epochs per phase
  max_backend_failure_epochs: 3    # abort after this many epochs where every call failed
  eval_step_budget: 4000000        # evaluation work limit per window while validating
  parallel_rollouts: true
  seed: 0

backend:
  kind: mock                       # mock | http
  endpoint: https://api.openai.com/v1/chat/completions
  model: gpt-5-mini
  api_key_env: OPENAI_API_KEY      # the key itself is read from this environment variable
  timeout_ms: 120000
  max_retries: 3
  initial_backoff_ms: 1000
  send_temperature: true

corpus:
  format: bgl_dash                 # bgl_dash | two_column
  window_size: 20
  stride: 0                        # 0 = same as window_size
)";
}

} // namespace logrules::cli
