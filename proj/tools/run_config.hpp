// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/backend.hpp>
#include <logrules/corpus.hpp>
#include <logrules/synth.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace logrules::cli
{

enum class BackendKind
{
    Mock,
    Http,
};

struct CorpusSettings
{
    std::filesystem::path path;
    LabelFormat format = LabelFormat::BglDash;
    std::size_t window_size = 20;
    std::size_t stride = 0;  ///< 0 means tumbling (stride = window_size)

    [[nodiscard]] std::size_t effective_stride() const noexcept { return stride == 0 ? window_size : stride; }
};

struct RunConfig
{
    SynthesisConfig synthesis;
    BackendKind backend = BackendKind::Mock;
    BackendConfig http;
    CorpusSettings corpus;
    std::filesystem::path output;
    std::optional<std::filesystem::path> transcript;
    std::optional<std::filesystem::path> prompt_dir;
};

class ConfigError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Parses a YAML document; unknown keys and invalid values raise ConfigError.
[[nodiscard]] RunConfig parse_run_config(std::string_view yaml);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// Checks cross-field constraints; throws ConfigError.
void validate(const RunConfig& config);

/// Commented YAML document holding every default value.
[[nodiscard]] std::string default_config_yaml();

} // namespace logrules::cli
