// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/corpus.hpp>
#include <logrules/sampling.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logrules
{

enum class PromptRole
{
    GenerateNormal,
    GenerateAbnormal,
    Repair,
    Refine,
};

[[nodiscard]] std::string_view to_string(PromptRole role) noexcept;

struct PromptAttachments
{
    std::optional<std::string> faulty_source;
    std::optional<std::string> error_messages;
    std::vector<LogWindow> misclassified_windows;
    std::optional<std::string> current_source;

    [[nodiscard]] bool empty() const noexcept
    {
        return !faulty_source && !error_messages && misclassified_windows.empty() && !current_source;
    }
};

struct PromptBundle
{
    PromptRole role = PromptRole::GenerateNormal;
    std::string instructions;
    ContrastiveGroup contrastive;
    PromptAttachments attachments;
};

/// Throws std::invalid_argument when a role's attachment requirements are violated.
void validate_bundle(const PromptBundle& bundle);

/// Prompt text assets addressed by name ("generate_normal", "repair", ...).
class PromptLibrary
{
  public:
    /// Templates compiled into the library from prompts/*.txt.
    [[nodiscard]] static PromptLibrary embedded();

    /// Embedded templates overridden by any <name>.txt found in `directory`.
    [[nodiscard]] static PromptLibrary with_overrides(const std::filesystem::path& directory);

    [[nodiscard]] const std::string& get(const std::string& name) const;

  private:
    std::map<std::string, std::string> _templates;
};

/// Substitutes {{name}} placeholders; unknown placeholders are left verbatim.
[[nodiscard]] std::string render_template(std::string_view text, const std::map<std::string, std::string>& vars);

[[nodiscard]] PromptBundle make_generate_bundle(const ContrastiveGroup& group, const PromptLibrary& prompts);
[[nodiscard]] PromptBundle make_repair_bundle(const ContrastiveGroup& group, std::string faulty_source,
                                              std::string error_messages, std::vector<LogWindow> misclassified,
                                              const PromptLibrary& prompts);
[[nodiscard]] PromptBundle make_refine_bundle(const ContrastiveGroup& group, std::string current_source,
                                              std::string overfitting_note, const PromptLibrary& prompts);

/// Deterministic prompt text: instructions, target-side windows (anchor first),
/// opposite-side windows, then attachments.
[[nodiscard]] std::string render_prompt(const PromptBundle& bundle);

struct Extraction
{
    std::optional<std::string> source;
    std::string error;
    bool multiple_blocks = false;
};

/// Content of the first ``` fenced block.
[[nodiscard]] Extraction extract_rule(std::string_view raw);

/// 64-bit FNV-1a, rendered as 16 hex digits.
[[nodiscard]] std::string fnv1a_hex(std::string_view data);

class BackendError: public std::runtime_error
{
  public:
    enum class Kind
    {
        Transport,
        HttpStatus,
        MalformedResponse,
        Configuration,
    };

    BackendError(Kind kind, const std::string& message, int status = 0);

    [[nodiscard]] Kind kind() const noexcept { return _kind; }
    [[nodiscard]] int status() const noexcept { return _status; }

  private:
    Kind _kind;
    int _status;
};

struct TokenUsage
{
    std::uint64_t input = 0;
    std::uint64_t output = 0;
};

/// Completion capability shared by concurrent rollouts.
class LlmBackend
{
  public:
    virtual ~LlmBackend() = default;

    /// Throws BackendError.
    virtual std::string complete(const PromptBundle& bundle) = 0;

    [[nodiscard]] virtual TokenUsage usage() const { return {}; }
};

struct BackendConfig
{
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-5-mini";
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::milliseconds timeout { 120'000 };
    unsigned max_retries = 3;
    std::chrono::milliseconds initial_backoff { 1'000 };
    /// Send temperature=0; disable for models that reject the parameter.
    bool send_temperature = true;
};

/// OpenAI-style chat-completions client.
class HttpBackend final: public LlmBackend
{
  public:
    explicit HttpBackend(BackendConfig config);

    std::string complete(const PromptBundle& bundle) override;
    [[nodiscard]] TokenUsage usage() const override;

    /// Total retries performed across all calls.
    [[nodiscard]] std::uint64_t retries() const noexcept { return _retries.load(); }

    /// Single request; exposed for tests and tooling.
    [[nodiscard]] std::string complete_text(const std::string& prompt);

  private:
    BackendConfig _config;
    std::atomic<std::uint64_t> _input_tokens { 0 };
    std::atomic<std::uint64_t> _output_tokens { 0 };
    std::atomic<std::uint64_t> _retries { 0 };
};

/// Deterministic stand-in for the LLM agents; output depends only on the bundle.
[[nodiscard]] std::string mock_complete(const PromptBundle& bundle);

class MockBackend final: public LlmBackend
{
  public:
    std::string complete(const PromptBundle& bundle) override { return mock_complete(bundle); }
};

/// Appends closers for unbalanced quotes, regex literals, parentheses and braces.
[[nodiscard]] std::string balance_delimiters(std::string_view source);

} // namespace logrules
