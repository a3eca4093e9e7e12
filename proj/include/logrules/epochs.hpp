// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/backend.hpp>
#include <logrules/clustering.hpp>
#include <logrules/corpus.hpp>
#include <logrules/rule_database.hpp>
#include <logrules/sampling.hpp>
#include <logrules/synth.hpp>

#include <atomic>
#include <functional>
#include <set>
#include <span>
#include <vector>

namespace logrules
{

struct EpochState
{
    Label phase = Label::Normal;
    std::vector<WindowId> remaining;  ///< ascending
    std::vector<Cluster> clusters;
    std::size_t epoch = 0;
    std::size_t initial_count = 0;
    /// Clusters whose last epoch produced no rule; cleared whenever a rule is accepted.
    std::set<ClusterId> exhausted;

    [[nodiscard]] double coverage() const noexcept
    {
        if (initial_count == 0)
            return 1.0;
        return 1.0 - static_cast<double>(remaining.size()) / static_cast<double>(initial_count);
    }

    /// Non-empty clusters that are not exhausted.
    [[nodiscard]] std::vector<Cluster> eligible_clusters() const;
};

/// Removes every remaining window the rule claims, from `remaining` and from cluster
/// memberships; empty clusters are dropped. The epoch counter is left untouched.
[[nodiscard]] EpochState apply_rule_filter(EpochState state, const Rule& rule, const WindowCatalog& catalog);

[[nodiscard]] bool should_stop(const EpochState& state, std::size_t database_size, const SynthesisConfig& config);

struct EpochReport
{
    Label phase = Label::Normal;
    std::size_t epoch = 0;
    double coverage = 0.0;
    std::size_t normal_rules = 0;
    std::size_t abnormal_rules = 0;
    bool accepted = false;
    std::vector<RolloutStatus> rollouts;
};

struct SynthesisHooks
{
    /// Called after every epoch.
    std::function<void(const EpochReport&)> on_epoch;
    /// Called after every accepted rule and once more on abort; used for persistence.
    std::function<void(const RuleDatabase&)> on_checkpoint;
    /// Polled between epochs; synthesis stops with a partial database when it becomes true.
    const std::atomic<bool>* cancel = nullptr;
    Transcript* transcript = nullptr;
    const PromptLibrary* prompts = nullptr;
};

/// Normal phase then abnormal phase over the training split; validation split drives selection.
[[nodiscard]] RuleDatabase run_synthesis(const Dataset& dataset, LlmBackend& backend, const SynthesisConfig& config,
                                         const SynthesisHooks& hooks = {});

} // namespace logrules
