// SPDX-License-Identifier: Apache-2.0
#include <logrules/epochs.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <unordered_set>

namespace logrules
{

namespace
{

// Below this many initial clusters every pair is examined; above it pairs are sampled.
constexpr std::size_t kExhaustiveMergeLimit = 2000;

} // namespace

std::vector<Cluster> EpochState::eligible_clusters() const
{
    auto out = std::vector<Cluster> {};
    for (auto const& cluster: clusters)
        if (!cluster.members.empty() && !exhausted.contains(cluster.id))
            out.push_back(cluster);
    return out;
}

EpochState apply_rule_filter(EpochState state, const Rule& rule, const WindowCatalog& catalog)
{
    auto claimed = std::unordered_set<WindowId> {};
    auto text = WindowText {};
    for (auto id: state.remaining)
    {
        text.assign(catalog.window(id).lines);
        if (evaluate(*rule.ast, text))
            claimed.insert(id);
    }
    if (claimed.empty())
        return state;

    std::erase_if(state.remaining, [&](WindowId id) { return claimed.contains(id); });
    for (auto& cluster: state.clusters)
        std::erase_if(cluster.members, [&](WindowId id) { return claimed.contains(id); });
    std::erase_if(state.clusters, [](const Cluster& c) { return c.members.empty(); });
    return state;
}

bool should_stop(const EpochState& state, std::size_t database_size, const SynthesisConfig& config)
{
    bool const normal = state.phase == Label::Normal;
    auto const stop_at = normal ? config.coverage_stop_normal : config.coverage_stop_abnormal;
    auto const cap = normal ? config.max_normal_rules : config.max_abnormal_rules;
    if (state.coverage() >= stop_at)
        return true;
    if (database_size >= cap)
        return true;
    if (state.epoch >= config.epoch_budget)
        return true;
    return std::none_of(state.clusters.begin(), state.clusters.end(), [&](const Cluster& c) {
        return !c.members.empty() && !state.exhausted.contains(c.id);
    });
}

namespace
{

class Synthesizer
{
  public:
    Synthesizer(const Dataset& dataset, LlmBackend& backend, const SynthesisConfig& config,
                const SynthesisHooks& hooks):
        _backend(backend), _config(config), _hooks(hooks)
    {
        auto const train = dataset.select(Split::Train);
        _validation = dataset.select(Split::Validation);
        auto const avg = average_window_length(train);
        _k_window = window_token_budget(config.window_token_scale, avg);
        for (auto const* window: train)
        {
            auto feature = window_feature(*window, config.line_top_k, _k_window);
            _catalog.add(*window, std::move(feature.tokens));
            (window->label == Label::Normal ? _normal_ids : _abnormal_ids).push_back(window->id);
        }
        std::sort(_normal_ids.begin(), _normal_ids.end());
        std::sort(_abnormal_ids.begin(), _abnormal_ids.end());

        _db.config = config;
        _db.corpus_fingerprint = corpus_fingerprint(dataset.windows);
    }

    RuleDatabase run()
    {
        if (_normal_ids.empty())
            spdlog::warn("training split has no normal windows; skipping the normal phase");
        else
        {
            auto const pool = deduplicate_by_feature(_abnormal_ids, _catalog);
            auto const uncovered = run_phase(Label::Normal, _normal_ids, pool);
            if (_db.partial)
                return finish();
            _uncovered_normal = uncovered;
        }

        if (_abnormal_ids.empty())
        {
            spdlog::info("training split has no abnormal windows; skipping the abnormal phase");
            return finish();
        }
        auto pool = deduplicate_by_feature(_uncovered_normal, _catalog);
        if (pool.empty())
        {
            spdlog::info("every normal training window is covered; contrasting abnormal windows with all normal ones");
            pool = deduplicate_by_feature(_normal_ids, _catalog);
        }
        (void) run_phase(Label::Abnormal, _abnormal_ids, pool);
        return finish();
    }

  private:
    RuleDatabase finish()
    {
        if (_db.partial && _hooks.on_checkpoint)
            _hooks.on_checkpoint(_db);
        return std::move(_db);
    }

    bool cancelled() const { return _hooks.cancel != nullptr && _hooks.cancel->load(); }

    /// Returns the target windows left uncovered when the phase ends.
    std::vector<WindowId> run_phase(Label kind, const std::vector<WindowId>& targets, const std::vector<WindowId>& pool)
    {
        auto features = std::vector<WindowFeature> {};
        features.reserve(targets.size());
        for (auto id: targets)
            features.push_back(WindowFeature { .window_id = id, .tokens = _catalog.feature(id) });
        auto clusters = initial_clusters(features);
        auto options = MergeOptions {};
        options.k_window = _k_window;
        options.max_iters = _config.max_merge_iters;
        options.exhaustive = clusters.size() <= kExhaustiveMergeLimit;
        options.seed = _config.seed + (kind == Label::Normal ? 0 : 1);
        clusters = hac_merge(std::move(clusters), options);
        spdlog::info("{} phase: {} windows in {} clusters", to_string(kind), targets.size(), clusters.size());

        auto state = EpochState {};
        state.phase = kind;
        state.remaining = targets;
        state.clusters = std::move(clusters);
        state.initial_count = targets.size();

        auto const params = SamplingParams { .w = _config.group_size,
                                             .theta_anchor = kind == Label::Normal
                                                                 ? _config.anchor_similarity_normal
                                                                 : _config.anchor_similarity_abnormal };
        std::size_t backend_failures = 0;
        auto remaining_windows = std::vector<const LogWindow*> {};

        while (!should_stop(state, _db.rules(kind).size(), _config))
        {
            if (cancelled())
            {
                abort("interrupted");
                break;
            }
            auto const eligible = state.eligible_clusters();
            auto group = build_contrastive_group(eligible, pool, kind, params, _catalog);
            if (!group)
                break;

            remaining_windows.clear();
            for (auto id: state.remaining)
                remaining_windows.push_back(&_catalog.window(id));

            auto const epoch_index = static_cast<std::int64_t>(state.epoch);
            auto results = run_rollouts(*group, remaining_windows, _backend, _config, epoch_index, _hooks.prompts);
            ++state.epoch;

            auto report = EpochReport {};
            report.phase = kind;
            report.epoch = state.epoch;
            auto candidates = std::vector<Rule> {};
            bool all_transport = !results.empty();
            for (auto& r: results)
            {
                report.rollouts.push_back(r.status);
                if (_hooks.transcript != nullptr)
                    _hooks.transcript->append(r.transcript);
                if (r.status != RolloutStatus::TransportError)
                    all_transport = false;
                if (r.rule)
                    candidates.push_back(std::move(*r.rule));
                else
                    spdlog::debug("epoch {} rollout {}: {} ({})", state.epoch, r.transcript_id, to_string(r.status),
                                  r.failure);
            }

            auto selection = select_rule(candidates, _validation, EvalBudget { _config.eval_step_budget });
            if (selection)
            {
                auto stored = StoredRule { .rule = std::move(selection->rule),
                                           .validation_coverage = selection->coverage };
                state = apply_rule_filter(std::move(state), stored.rule, _catalog);
                state.exhausted.clear();
                spdlog::info("{} epoch {}: accepted {} (coverage {:.4f})", to_string(kind), state.epoch,
                             stored.rule.name, state.coverage());
                _db.add(std::move(stored));
                report.accepted = true;
                if (_hooks.on_checkpoint)
                    _hooks.on_checkpoint(_db);
            }
            else if (!all_transport)
            {
                // A backend outage says nothing about the cluster, so it stays eligible.
                state.exhausted.insert(group->cluster_id);
                spdlog::info("{} epoch {}: no rule accepted for cluster {}", to_string(kind), state.epoch,
                             group->cluster_id);
            }

            report.coverage = state.coverage();
            report.normal_rules = _db.normal_rules.size();
            report.abnormal_rules = _db.abnormal_rules.size();
            if (_hooks.on_epoch)
                _hooks.on_epoch(report);

            backend_failures = all_transport ? backend_failures + 1 : 0;
            if (backend_failures >= _config.max_backend_failure_epochs)
            {
                abort("backend failed in every rollout of " + std::to_string(backend_failures)
                      + " consecutive epochs");
                break;
            }
        }
        return state.remaining;
    }

    void abort(std::string reason)
    {
        spdlog::error("synthesis aborted: {}", reason);
        _db.partial = true;
        _db.abort_reason = std::move(reason);
    }

    LlmBackend& _backend;
    SynthesisConfig _config;
    SynthesisHooks _hooks;
    WindowCatalog _catalog;
    std::vector<const LogWindow*> _validation;
    std::size_t _k_window = 1;
    std::vector<WindowId> _normal_ids;
    std::vector<WindowId> _abnormal_ids;
    std::vector<WindowId> _uncovered_normal;
    RuleDatabase _db;
};

} // namespace

RuleDatabase run_synthesis(const Dataset& dataset, LlmBackend& backend, const SynthesisConfig& config,
                           const SynthesisHooks& hooks)
{
    validate(config);
    return Synthesizer(dataset, backend, config, hooks).run();
}

} // namespace logrules
