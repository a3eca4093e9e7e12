// SPDX-License-Identifier: Apache-2.0
#include <logrules/synth.hpp>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <future>
#include <ostream>
#include <stdexcept>

namespace logrules
{

void validate(const SynthesisConfig& c)
{
    auto unit = [](double value, const char* name) {
        if (!(value > 0.0 && value <= 1.0))
            throw std::invalid_argument(fmt::format("{} must be in (0, 1], got {}", name, value));
    };
    auto positive = [](std::size_t value, const char* name) {
        if (value < 1)
            throw std::invalid_argument(fmt::format("{} must be at least 1", name));
    };
    positive(c.group_size, "group_size");
    positive(c.line_top_k, "line_top_k");
    positive(c.max_merge_iters, "max_merge_iters");
    positive(c.max_normal_rules, "max_normal_rules");
    positive(c.max_abnormal_rules, "max_abnormal_rules");
    positive(c.rollouts, "rollouts");
    positive(c.epoch_budget, "epoch_budget");
    positive(c.max_backend_failure_epochs, "max_backend_failure_epochs");
    unit(c.window_token_scale, "window_token_scale");
    unit(c.anchor_similarity_normal, "anchor_similarity_normal");
    unit(c.anchor_similarity_abnormal, "anchor_similarity_abnormal");
    unit(c.coverage_stop_normal, "coverage_stop_normal");
    unit(c.coverage_stop_abnormal, "coverage_stop_abnormal");
    unit(c.generalization_normal, "generalization_normal");
    unit(c.generalization_abnormal, "generalization_abnormal");
}

std::string_view to_string(RolloutStatus status) noexcept
{
    switch (status)
    {
        case RolloutStatus::Accepted: return "accepted";
        case RolloutStatus::FailedLocal: return "failed_local";
        case RolloutStatus::FailedGeneralize: return "failed_generalize";
        case RolloutStatus::TransportError: return "transport_error";
        case RolloutStatus::EpochDiscarded: return "epoch_discarded";
    }
    return "failed_local";
}

LocalTestResult local_test(const Rule& rule, const ContrastiveGroup& group, EvalBudget budget)
{
    auto result = LocalTestResult {};
    if (rule.kind != group.target_kind)
    {
        result.error_text = fmt::format("rule kind is {} but a {} rule was requested", to_string(rule.kind),
                                        to_string(group.target_kind));
        return result;
    }

    auto errors = std::vector<std::string> {};
    auto text = WindowText {};
    auto check = [&](const LogWindow& window, bool expected) {
        text.assign(window.lines);
        auto const outcome = evaluate_bounded(*rule.ast, text, budget);
        if (outcome.timed_out)
        {
            result.misclassified.push_back(window.id);
            errors.push_back(fmt::format("evaluation budget exceeded on {} window {}", to_string(window.label),
                                         window.id));
        }
        else if (outcome.verdict != expected)
        {
            result.misclassified.push_back(window.id);
            errors.push_back(fmt::format("returned {} on {} window {} (expected {})", outcome.verdict,
                                         to_string(window.label), window.id, expected));
        }
    };
    for (auto const& window: group.same_label_windows)
        check(window, true);
    for (auto const& window: group.opposite_label_windows)
        check(window, false);

    result.passed = errors.empty();
    result.error_text = fmt::format("{}", fmt::join(errors, "\n"));
    return result;
}

GeneralizationResult validate_generalizability(const Rule& rule, std::span<const LogWindow* const> remaining,
                                               double threshold, EvalBudget budget)
{
    if (remaining.empty())
        return { 1.0, true };
    std::size_t matched = 0;
    auto text = WindowText {};
    for (auto const* window: remaining)
    {
        text.assign(window->lines);
        auto const outcome = evaluate_bounded(*rule.ast, text, budget);
        if (outcome.verdict && !outcome.timed_out)
            ++matched;
    }
    auto const proportion = static_cast<double>(matched) / static_cast<double>(remaining.size());
    return { proportion, proportion >= threshold };
}

void Transcript::record(TranscriptEntry entry)
{
    auto lock = std::lock_guard(_mutex);
    _entries.push_back(std::move(entry));
}

void Transcript::append(std::span<const TranscriptEntry> entries)
{
    auto lock = std::lock_guard(_mutex);
    _entries.insert(_entries.end(), entries.begin(), entries.end());
}

std::vector<TranscriptEntry> Transcript::entries() const
{
    auto lock = std::lock_guard(_mutex);
    return _entries;
}

void Transcript::write_jsonl(std::ostream& out) const
{
    for (auto const& e: entries())
    {
        auto record = nlohmann::ordered_json {
            { "epoch", e.epoch },
            { "rollout", e.rollout },
            { "role", to_string(e.role) },
            { "prompt_hash", e.prompt_hash },
            { "outcome", e.outcome },
        };
        out << record.dump() << '\n';
    }
}

namespace
{

const PromptLibrary& library_for(const RolloutContext& context)
{
    static const PromptLibrary embedded = PromptLibrary::embedded();
    return context.prompts != nullptr ? *context.prompts : embedded;
}

struct Candidate
{
    std::optional<Rule> rule;
    std::string source;
    std::string error;
    std::vector<LogWindow> misclassified;
    std::string outcome;
};

/// Extracts, parses and locally tests a raw completion.
Candidate examine(std::string_view raw, const ContrastiveGroup& group, EvalBudget budget, std::string fallback_source)
{
    auto candidate = Candidate {};
    auto extraction = extract_rule(raw);
    if (!extraction.source)
    {
        candidate.source = std::move(fallback_source);
        candidate.error = extraction.error;
        candidate.outcome = "no_fenced_block";
        return candidate;
    }
    candidate.source = *extraction.source;
    auto parsed = parse_rule(candidate.source);
    if (auto* error = std::get_if<ParseError>(&parsed))
    {
        candidate.error = error->describe();
        candidate.outcome = "parse_error";
        return candidate;
    }
    auto rule = std::get<Rule>(std::move(parsed));
    auto const test = local_test(rule, group, budget);
    if (!test.passed)
    {
        candidate.error = test.error_text;
        candidate.outcome = "local_test_failed";
        auto lookup = [&](WindowId id) -> const LogWindow* {
            for (auto const* side: { &group.same_label_windows, &group.opposite_label_windows })
                for (auto const& w: *side)
                    if (w.id == id)
                        return &w;
            return nullptr;
        };
        for (auto id: test.misclassified)
            if (auto const* w = lookup(id))
                candidate.misclassified.push_back(*w);
        return candidate;
    }
    candidate.rule = std::move(rule);
    candidate.outcome = "passed_local_test";
    return candidate;
}

std::string call(LlmBackend& backend, const PromptBundle& bundle, const RolloutContext& context,
                 std::vector<TranscriptEntry>* transcript, std::size_t* calls, TranscriptEntry& entry)
{
    entry = TranscriptEntry { .epoch = context.epoch,
                              .rollout = context.rollout,
                              .role = bundle.role,
                              .prompt_hash = fnv1a_hex(render_prompt(bundle)),
                              .outcome = {} };
    if (calls != nullptr)
        ++*calls;
    try
    {
        return backend.complete(bundle);
    }
    catch (const BackendError& e)
    {
        entry.outcome = fmt::format("backend_error: {}", e.what());
        if (transcript != nullptr)
            transcript->push_back(entry);
        throw;
    }
}

} // namespace

RepairOutcome repair_loop(std::string source, std::string error_text, std::vector<LogWindow> misclassified,
                          const ContrastiveGroup& group, LlmBackend& backend, std::size_t max_iters,
                          const RolloutContext& context, EvalBudget budget, std::vector<TranscriptEntry>* transcript,
                          std::size_t* calls)
{
    auto const& prompts = library_for(context);
    auto outcome = RepairOutcome { .rule = std::nullopt, .iterations = 0, .last_error = error_text };
    for (std::size_t iter = 1; iter <= max_iters; ++iter)
    {
        outcome.iterations = iter;
        auto const bundle = make_repair_bundle(group, source, error_text, misclassified, prompts);
        auto entry = TranscriptEntry {};
        auto const raw = call(backend, bundle, context, transcript, calls, entry);
        auto candidate = examine(raw, group, budget, source);
        entry.outcome = candidate.outcome;
        if (transcript != nullptr)
            transcript->push_back(entry);
        if (candidate.rule)
        {
            outcome.rule = std::move(candidate.rule);
            outcome.last_error.clear();
            return outcome;
        }
        source = std::move(candidate.source);
        error_text = std::move(candidate.error);
        misclassified = std::move(candidate.misclassified);
        outcome.last_error = error_text;
    }
    return outcome;
}

RolloutResult rollout(const ContrastiveGroup& group, std::span<const LogWindow* const> remaining,
                      LlmBackend& backend, const SynthesisConfig& config, const RolloutContext& context)
{
    auto const& prompts = library_for(context);
    auto const budget = EvalBudget { config.eval_step_budget };
    auto const threshold =
        group.target_kind == Label::Normal ? config.generalization_normal : config.generalization_abnormal;

    auto result = RolloutResult {};
    result.transcript_id = fmt::format("e{}-r{}", context.epoch, context.rollout);
    auto* transcript = &result.transcript;
    auto* calls = &result.backend_calls;

    try
    {
        auto const bundle = make_generate_bundle(group, prompts);
        auto entry = TranscriptEntry {};
        auto const raw = call(backend, bundle, context, transcript, calls, entry);
        auto candidate = examine(raw, group, budget, {});
        entry.outcome = candidate.outcome;
        transcript->push_back(entry);

        auto rule = std::move(candidate.rule);
        if (!rule)
        {
            auto repaired = repair_loop(candidate.source, candidate.error, candidate.misclassified, group, backend,
                                        config.max_repair_iters, context, budget, transcript, calls);
            result.repair_count = repaired.iterations;
            if (!repaired.rule)
            {
                result.status = RolloutStatus::FailedLocal;
                result.failure = repaired.last_error;
                return result;
            }
            rule = std::move(repaired.rule);
        }

        auto generalization = validate_generalizability(*rule, remaining, threshold, budget);
        result.generalization = generalization.proportion;
        for (std::size_t iter = 0; !generalization.passed && iter < config.max_refine_iters; ++iter)
        {
            auto const note = fmt::format("{:.1f}% ({} windows)", 100.0 * generalization.proportion, remaining.size());
            auto const refine_bundle = make_refine_bundle(group, pretty_print(*rule), note, prompts);
            auto refine_entry = TranscriptEntry {};
            auto const refined_raw = call(backend, refine_bundle, context, transcript, calls, refine_entry);
            auto refined = examine(refined_raw, group, budget, {});
            refine_entry.outcome = refined.outcome;
            transcript->push_back(refine_entry);
            result.refined = true;
            if (!refined.rule)
            {
                result.status = RolloutStatus::EpochDiscarded;
                result.failure = "refined rule failed local testing: " + refined.error;
                return result;
            }
            rule = std::move(refined.rule);
            generalization = validate_generalizability(*rule, remaining, threshold, budget);
            result.generalization = generalization.proportion;
        }

        if (!generalization.passed)
        {
            result.status =
                config.max_refine_iters == 0 ? RolloutStatus::FailedGeneralize : RolloutStatus::EpochDiscarded;
            result.failure = fmt::format("rule covers {:.4f} of remaining windows, below {}",
                                         generalization.proportion, threshold);
            return result;
        }

        rule->provenance = Provenance { .epoch = context.epoch,
                                        .rollout = context.rollout,
                                        .transcript_id = result.transcript_id };
        result.rule = std::move(rule);
        result.status = RolloutStatus::Accepted;
        return result;
    }
    catch (const BackendError& e)
    {
        result.status = RolloutStatus::TransportError;
        result.failure = e.what();
        result.rule.reset();
        return result;
    }
}

std::vector<RolloutResult> run_rollouts(const ContrastiveGroup& group, std::span<const LogWindow* const> remaining,
                                        LlmBackend& backend, const SynthesisConfig& config, std::int64_t epoch,
                                        const PromptLibrary* prompts)
{
    auto context_for = [&](std::size_t i) {
        return RolloutContext { .epoch = epoch, .rollout = static_cast<std::int64_t>(i), .prompts = prompts };
    };
    auto results = std::vector<RolloutResult> {};
    results.reserve(config.rollouts);
    if (!config.parallel_rollouts || config.rollouts == 1)
    {
        for (std::size_t i = 0; i < config.rollouts; ++i)
            results.push_back(rollout(group, remaining, backend, config, context_for(i)));
        return results;
    }
    auto futures = std::vector<std::future<RolloutResult>> {};
    for (std::size_t i = 0; i < config.rollouts; ++i)
        futures.push_back(std::async(std::launch::async, [&, i] {
            return rollout(group, remaining, backend, config, context_for(i));
        }));
    for (auto& f: futures)
        results.push_back(f.get());
    return results;
}

std::optional<Selection> select_rule(std::span<const Rule> candidates, std::span<const LogWindow* const> validation,
                                     EvalBudget budget)
{
    auto texts = std::vector<WindowText> {};
    texts.reserve(validation.size());
    for (auto const* window: validation)
        texts.emplace_back(window->lines);

    auto best = std::optional<Selection> {};
    std::size_t best_atoms = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c)
    {
        auto const& rule = candidates[c];
        std::size_t target = 0;
        std::size_t covered = 0;
        bool safe = true;
        for (std::size_t i = 0; i < validation.size() && safe; ++i)
        {
            auto const outcome = evaluate_bounded(*rule.ast, texts[i], budget);
            if (validation[i]->label == rule.kind)
            {
                ++target;
                covered += (outcome.verdict && !outcome.timed_out) ? 1 : 0;
            }
            else if (outcome.verdict || outcome.timed_out)
                safe = false;
        }
        if (!safe)
        {
            spdlog::debug("candidate {} eliminated: claims an opposite-label validation window", rule.name);
            continue;
        }
        auto const coverage = target == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(target);
        auto const atoms = atom_count(*rule.ast);
        if (!best || coverage > best->coverage || (coverage == best->coverage && atoms < best_atoms))
        {
            best = Selection { .rule = rule, .coverage = coverage, .candidate_index = c };
            best_atoms = atoms;
        }
    }
    return best;
}

} // namespace logrules
