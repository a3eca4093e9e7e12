// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace logrules::cli
{

enum ExitCode : int
{
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
    kExitBackend = 3,
    kExitInterrupted = 130,
};

struct SynthesizeOptions
{
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> corpus;
    std::optional<std::filesystem::path> output;
    std::optional<std::string> backend;
    std::optional<std::string> format;
    std::optional<std::size_t> window_size;
    std::optional<std::size_t> stride;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> transcript;
};

int cmd_synthesize(const SynthesizeOptions& options, const std::atomic<bool>* cancel = nullptr);

struct DetectOptions
{
    std::filesystem::path database;
    std::optional<std::filesystem::path> input;  ///< stdin when absent or "-"
    std::optional<std::filesystem::path> output; ///< stdout when absent or "-"
    std::optional<std::size_t> window_size;
    std::optional<std::size_t> stride;
    std::string format = "raw";                  ///< raw | bgl_dash
};

int cmd_detect(const DetectOptions& options, std::istream& in, std::ostream& out);

struct EvaluateOptions
{
    std::filesystem::path database;
    std::filesystem::path corpus;
    std::string format = "bgl_dash";
    std::string split = "test";  ///< test | all
    std::optional<std::size_t> window_size;
    std::optional<std::size_t> stride;
};

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out);

/// action: list | show | stats
int cmd_rules(const std::filesystem::path& database, const std::string& action, const std::string& name,
              std::ostream& out);

struct GenerateOptions
{
    std::string kind = "planted";  ///< planted | dominant | geometric
    std::size_t windows = 2000;
    std::size_t window_size = 20;
    double abnormal_fraction = 0.1;
    std::uint64_t seed = 7;
    double minority_fraction = 0.005;
    std::size_t patterns = 6;
    std::filesystem::path output;
};

int cmd_generate(const GenerateOptions& options);

} // namespace logrules::cli
