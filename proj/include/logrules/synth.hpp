// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/backend.hpp>
#include <logrules/corpus.hpp>
#include <logrules/rule.hpp>
#include <logrules/sampling.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace logrules
{

struct SynthesisConfig
{
    std::size_t group_size = 5;           ///< windows per side of a contrastive group
    std::size_t line_top_k = 2;           ///< tokens kept per line in window features
    double window_token_scale = 0.5;      ///< feature budget per window = scale * mean window length
    std::size_t max_merge_iters = 4;      ///< clustering passes
    double anchor_similarity_normal = 0.2;
    double anchor_similarity_abnormal = 0.2;
    std::size_t max_normal_rules = 200;
    std::size_t max_abnormal_rules = 200;
    double coverage_stop_normal = 0.99;
    double coverage_stop_abnormal = 0.995;
    std::size_t rollouts = 2;
    double generalization_normal = 0.8;
    double generalization_abnormal = 0.8;
    std::size_t max_repair_iters = 3;
    std::size_t max_refine_iters = 1;
    std::size_t epoch_budget = 500;
    /// Consecutive epochs in which every rollout hit a backend error before synthesis aborts.
    std::size_t max_backend_failure_epochs = 3;
    /// Per-window evaluation step budget during validation (0 = unbounded).
    std::uint64_t eval_step_budget = 4'000'000;
    bool parallel_rollouts = true;
    std::uint64_t seed = 0;

    friend bool operator==(const SynthesisConfig&, const SynthesisConfig&) = default;
};

/// Calls f(key, field) for every tunable field; keys are the config-file names.
template <typename Config, typename F>
    requires std::is_same_v<std::remove_const_t<Config>, SynthesisConfig>
void for_each_field(Config& c, F&& f)
{
    f("group_size", c.group_size);
    f("line_top_k", c.line_top_k);
    f("window_token_scale", c.window_token_scale);
    f("max_merge_iters", c.max_merge_iters);
    f("anchor_similarity_normal", c.anchor_similarity_normal);
    f("anchor_similarity_abnormal", c.anchor_similarity_abnormal);
    f("max_normal_rules", c.max_normal_rules);
    f("max_abnormal_rules", c.max_abnormal_rules);
    f("coverage_stop_normal", c.coverage_stop_normal);
    f("coverage_stop_abnormal", c.coverage_stop_abnormal);
    f("rollouts", c.rollouts);
    f("generalization_normal", c.generalization_normal);
    f("generalization_abnormal", c.generalization_abnormal);
    f("max_repair_iters", c.max_repair_iters);
    f("max_refine_iters", c.max_refine_iters);
    f("epoch_budget", c.epoch_budget);
    f("max_backend_failure_epochs", c.max_backend_failure_epochs);
    f("eval_step_budget", c.eval_step_budget);
    f("parallel_rollouts", c.parallel_rollouts);
    f("seed", c.seed);
}

/// Throws std::invalid_argument naming the offending field.
void validate(const SynthesisConfig& config);

struct LocalTestResult
{
    bool passed = false;
    std::vector<WindowId> misclassified;
    std::string error_text;
};

/// Rule must hold on every target-side window and fail on every opposite-side window.
[[nodiscard]] LocalTestResult local_test(const Rule& rule, const ContrastiveGroup& group, EvalBudget budget = {});

struct GeneralizationResult
{
    double proportion = 1.0;
    bool passed = true;
};

/// Share of `remaining` (same-kind windows) the rule claims; vacuous pass when empty.
[[nodiscard]] GeneralizationResult validate_generalizability(const Rule& rule,
                                                             std::span<const LogWindow* const> remaining,
                                                             double threshold, EvalBudget budget = {});

struct TranscriptEntry
{
    std::int64_t epoch = -1;
    std::int64_t rollout = -1;
    PromptRole role = PromptRole::GenerateNormal;
    std::string prompt_hash;
    std::string outcome;
};

/// Thread-safe append-only log of agent calls.
class Transcript
{
  public:
    void record(TranscriptEntry entry);
    void append(std::span<const TranscriptEntry> entries);
    [[nodiscard]] std::vector<TranscriptEntry> entries() const;
    void write_jsonl(std::ostream& out) const;

  private:
    mutable std::mutex _mutex;
    std::vector<TranscriptEntry> _entries;
};

struct RolloutContext
{
    std::int64_t epoch = -1;
    std::int64_t rollout = 0;
    const PromptLibrary* prompts = nullptr;  ///< embedded templates when null
};

enum class RolloutStatus
{
    Accepted,
    FailedLocal,
    FailedGeneralize,
    TransportError,
    EpochDiscarded,
};

[[nodiscard]] std::string_view to_string(RolloutStatus status) noexcept;

struct RolloutResult
{
    RolloutStatus status = RolloutStatus::FailedLocal;
    std::optional<Rule> rule;  ///< present iff accepted
    std::size_t repair_count = 0;
    bool refined = false;
    std::string transcript_id;
    double generalization = 0.0;
    std::size_t backend_calls = 0;
    std::string failure;
    std::vector<TranscriptEntry> transcript;
};

struct RepairOutcome
{
    std::optional<Rule> rule;
    std::size_t iterations = 0;
    std::string last_error;
};

/// Up to `max_iters` repair prompts; first version passing parse and local_test wins.
/// Backend errors propagate.
[[nodiscard]] RepairOutcome repair_loop(std::string source, std::string error_text,
                                        std::vector<LogWindow> misclassified, const ContrastiveGroup& group,
                                        LlmBackend& backend, std::size_t max_iters, const RolloutContext& context,
                                        EvalBudget budget, std::vector<TranscriptEntry>* transcript = nullptr,
                                        std::size_t* calls = nullptr);

/// generate -> parse/local test (+repair) -> generalizability -> refine -> re-validate.
[[nodiscard]] RolloutResult rollout(const ContrastiveGroup& group, std::span<const LogWindow* const> remaining,
                                    LlmBackend& backend, const SynthesisConfig& config,
                                    const RolloutContext& context);

/// config.rollouts independent rollouts, optionally concurrent; results ordered by rollout index.
[[nodiscard]] std::vector<RolloutResult> run_rollouts(const ContrastiveGroup& group,
                                                      std::span<const LogWindow* const> remaining,
                                                      LlmBackend& backend, const SynthesisConfig& config,
                                                      std::int64_t epoch, const PromptLibrary* prompts = nullptr);

struct Selection
{
    Rule rule;
    double coverage = 0.0;
    std::size_t candidate_index = 0;
};

/// Drops candidates claiming any opposite-kind validation window, then maximizes
/// target-kind coverage (ties: fewer atoms, then lower index).
[[nodiscard]] std::optional<Selection> select_rule(std::span<const Rule> candidates,
                                                   std::span<const LogWindow* const> validation,
                                                   EvalBudget budget = {});

} // namespace logrules
