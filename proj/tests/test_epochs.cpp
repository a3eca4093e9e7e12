// SPDX-License-Identifier: Apache-2.0
#include "fakes.hpp"
#include "helpers.hpp"

#include <logrules/epochs.hpp>
#include <logrules/planted.hpp>

#include <functional>
#include <random>

using namespace logrules;

namespace
{

/// Delegates to the mock unless `sabotage` says the group should get a useless answer.
class SelectiveBackend final: public LlmBackend
{
  public:
    explicit SelectiveBackend(std::function<bool(const ContrastiveGroup&)> sabotage): _sabotage(std::move(sabotage)) {}

    std::string complete(const PromptBundle& bundle) override
    {
        if (_sabotage(bundle.contrastive))
            return "I cannot help with that.";
        return mock_complete(bundle);
    }

  private:
    std::function<bool(const ContrastiveGroup&)> _sabotage;
};

WindowCatalog catalog_of(const std::vector<LogWindow>& windows)
{
    WindowCatalog catalog;
    for (auto const& w: windows)
    {
        auto tokens = std::vector<std::string> {};
        for (auto const& l: w.lines)
            for (auto& t: tokenize(l))
                tokens.push_back(t);
        catalog.add(w, make_token_set(tokens));
    }
    return catalog;
}

/// Windows laid out so that each split receives every pattern: pattern of window i is pattern(i).
Dataset interleaved(std::size_t n, const std::function<LogWindow(WindowId)>& make)
{
    auto windows = std::vector<LogWindow> {};
    for (WindowId i = 0; i < n; ++i)
        windows.push_back(make(i));
    return split_dataset(std::move(windows));
}

SynthesisConfig quick_config()
{
    auto c = SynthesisConfig {};
    c.parallel_rollouts = false;
    return c;
}

Dataset planted_dataset(const PlantedOptions& options = {})
{
    auto const corpus = planted_corpus(options);
    return split_dataset(make_windows(corpus.lines, corpus.window_size, corpus.window_size));
}

} // namespace

TEST_SUITE("epochs")
{
    TEST_CASE("filter removes exactly the claimed windows")
    {
        auto windows = std::vector<LogWindow> {};
        for (WindowId i = 0; i < 100; ++i)
            windows.push_back(testing::window(i, { i < 30 ? "svc hit" : "svc miss" }));
        auto const catalog = catalog_of(windows);

        auto state = EpochState {};
        for (WindowId i = 0; i < 100; ++i)
            state.remaining.push_back(i);
        state.initial_count = 100;
        state.clusters = { Cluster { .id = 0, .members = { 0, 1, 2 }, .feature = {} },
                           Cluster { .id = 1, .members = { 28, 29, 30, 31 }, .feature = {} },
                           Cluster { .id = 2, .members = { 50, 60 }, .feature = {} } };
        state.epoch = 4;

        auto const hit = testing::rule(R"(rule h normal "d" { contains("hit") })");
        auto const after = apply_rule_filter(state, hit, catalog);
        CHECK(after.remaining.size() == 70);
        CHECK(after.remaining.front() == 30);
        CHECK(after.coverage() == doctest::Approx(0.3));
        CHECK(after.epoch == 4);
        REQUIRE(after.clusters.size() == 2);
        CHECK(after.clusters[0].id == 1);
        CHECK(after.clusters[0].members == std::vector<WindowId> { 30, 31 });

        auto const none = testing::rule(R"(rule n normal "d" { contains("nothing") })");
        auto const unchanged = apply_rule_filter(state, none, catalog);
        CHECK(unchanged.remaining == state.remaining);
        CHECK(unchanged.clusters.size() == 3);
    }

    TEST_CASE("stopping criteria")
    {
        auto const config = SynthesisConfig {};
        auto state = EpochState {};
        state.clusters = { Cluster { .id = 0, .members = { 1 }, .feature = {} } };
        state.initial_count = 1000;
        state.remaining.resize(8);  // coverage 0.992
        CHECK(should_stop(state, 5, config));

        state.phase = Label::Abnormal;  // 0.992 < 0.995
        CHECK_FALSE(should_stop(state, 5, config));
        state.remaining.resize(5);
        CHECK(should_stop(state, 5, config));

        state.phase = Label::Normal;
        state.remaining.resize(500);
        CHECK_FALSE(should_stop(state, 10, config));
        CHECK(should_stop(state, 200, config));

        state.epoch = config.epoch_budget;
        CHECK(should_stop(state, 10, config));
        state.epoch = 0;

        state.exhausted.insert(0);
        CHECK(should_stop(state, 10, config));
        state.exhausted.clear();
        state.clusters.clear();
        CHECK(should_stop(state, 10, config));
    }

    TEST_CASE("one normal pattern and one abnormal keyword give one rule each")
    {
        auto const dataset = interleaved(200, [](WindowId i) {
            if (i % 5 == 0)
                return testing::window(i, { "ciod: startup", "ciod: KERNDTLB data TLB error" }, Label::Abnormal);
            return testing::window(i, { "ciod: startup", "ciod: heartbeat ok" });
        });
        MockBackend mock;
        auto const db = run_synthesis(dataset, mock, quick_config());
        REQUIRE(db.normal_rules.size() == 1);
        REQUIRE(db.abnormal_rules.size() == 1);
        CHECK_FALSE(db.partial);

        // brute force over the whole training split: each rule holds on its side only
        for (auto const* window: dataset.select(Split::Train))
        {
            for (auto const& stored: { db.normal_rules[0], db.abnormal_rules[0] })
            {
                bool const fires = evaluate(stored.rule, window->lines);
                CHECK(fires == (window->label == stored.rule.kind));
            }
        }
    }

    TEST_CASE("a corpus without abnormal windows skips the abnormal phase")
    {
        auto const dataset = interleaved(60, [](WindowId i) {
            return testing::window(i, { i % 2 ? "svc alpha ready" : "svc beta ready" });
        });
        MockBackend mock;
        auto const db = run_synthesis(dataset, mock, quick_config());
        CHECK(db.abnormal_rules.empty());
        CHECK_FALSE(db.normal_rules.empty());
        CHECK_FALSE(db.partial);
    }

    TEST_CASE("a failed epoch moves on to the next cluster")
    {
        auto const dataset = interleaved(300, [](WindowId i) {
            if (i % 10 == 0)
                return testing::window(i, { "KERNMC job started", "KERNMC job done" }, Label::Abnormal);
            auto const tag = std::string(i % 3 == 0 ? "beta" : "alpha");
            return testing::window(i, { tag + " job started", tag + " job done" });
        });
        SelectiveBackend backend([](const ContrastiveGroup& g) {
            return g.target_kind == Label::Normal && g.same_label_windows.front().lines[0].find("alpha") != std::string::npos;
        });
        auto reports = std::vector<EpochReport> {};
        auto hooks = SynthesisHooks {};
        hooks.on_epoch = [&](const EpochReport& r) { reports.push_back(r); };
        auto config = quick_config();
        config.generalization_normal = 0.3;  // beta alone covers a third of the normal windows
        auto const db = run_synthesis(dataset, backend, config, hooks);

        REQUIRE_FALSE(reports.empty());
        CHECK_FALSE(reports.front().accepted);  // the alpha cluster is the largest and fails
        REQUIRE(db.normal_rules.size() == 1);
        CHECK(pretty_print(*db.normal_rules[0].rule.ast) == "contains(\"beta\")");
        CHECK(db.abnormal_rules.size() == 1);
    }

    TEST_CASE("coverage is monotone within a phase and phases are ordered")
    {
        auto const dataset = planted_dataset({ .windows = 600, .window_size = 20, .abnormal_fraction = 0.1, .seed = 3 });
        auto reports = std::vector<EpochReport> {};
        std::size_t checkpoints = 0;
        auto hooks = SynthesisHooks {};
        hooks.on_epoch = [&](const EpochReport& r) { reports.push_back(r); };
        hooks.on_checkpoint = [&](const RuleDatabase&) { ++checkpoints; };
        MockBackend mock;
        auto const db = run_synthesis(dataset, mock, quick_config(), hooks);

        bool seen_abnormal = false;
        double last = 0.0;
        std::size_t accepted = 0;
        for (auto const& r: reports)
        {
            if (r.phase == Label::Abnormal && !seen_abnormal)
            {
                seen_abnormal = true;
                last = 0.0;
            }
            CHECK_FALSE((seen_abnormal && r.phase == Label::Normal));
            CHECK(r.coverage >= last);
            last = r.coverage;
            accepted += r.accepted ? 1 : 0;
        }
        CHECK(accepted == db.normal_rules.size() + db.abnormal_rules.size());
        CHECK(checkpoints == accepted);
        for (auto const& s: db.normal_rules)
            CHECK(s.rule.kind == Label::Normal);
        for (auto const& s: db.abnormal_rules)
            CHECK(s.rule.kind == Label::Abnormal);
        CHECK(db.corpus_fingerprint == corpus_fingerprint(dataset.windows));
    }

    TEST_CASE("stored rules never claim an opposite-label validation window")
    {
        for (std::uint64_t seed: { 1, 2, 3, 4 })
        {
            auto const dataset = planted_dataset({ .windows = 400, .window_size = 20, .abnormal_fraction = 0.15, .seed = seed });
            MockBackend mock;
            auto const db = run_synthesis(dataset, mock, quick_config());
            for (auto const* window: dataset.select(Split::Validation))
                for (auto kind: { Label::Normal, Label::Abnormal })
                    for (auto const& stored: db.rules(kind))
                        if (window->label != kind)
                            CHECK_FALSE(evaluate(stored.rule, window->lines));
        }
    }

    TEST_CASE("synthesis is reproducible")
    {
        auto const dataset = planted_dataset({ .windows = 500, .window_size = 20, .abnormal_fraction = 0.1, .seed = 9 });
        MockBackend mock;
        auto config = SynthesisConfig {};
        config.parallel_rollouts = true;
        CHECK(to_json(run_synthesis(dataset, mock, config)) == to_json(run_synthesis(dataset, mock, config)));
    }

    TEST_CASE("cancellation yields a flagged partial database")
    {
        auto const dataset = planted_dataset({ .windows = 300, .window_size = 20, .abnormal_fraction = 0.1, .seed = 5 });
        std::atomic<bool> cancel { false };
        std::size_t checkpoints = 0;
        auto hooks = SynthesisHooks {};
        hooks.cancel = &cancel;
        hooks.on_checkpoint = [&](const RuleDatabase&) {
            ++checkpoints;
            cancel = true;
        };
        MockBackend mock;
        auto const db = run_synthesis(dataset, mock, quick_config(), hooks);
        CHECK(db.partial);
        CHECK(db.abort_reason == "interrupted");
        CHECK(db.normal_rules.size() == 1);
        CHECK(db.abnormal_rules.empty());
        CHECK(checkpoints == 2);  // the accepted rule, then the abort
    }

    TEST_CASE("a persistently failing backend aborts after the configured number of epochs")
    {
        auto const dataset = planted_dataset({ .windows = 300, .window_size = 20, .abnormal_fraction = 0.1, .seed = 5 });
        testing::ScriptedBackend failing({ testing::ScriptedBackend::Fail {} });
        std::size_t epochs = 0;
        auto hooks = SynthesisHooks {};
        hooks.on_epoch = [&](const EpochReport&) { ++epochs; };
        auto const db = run_synthesis(dataset, failing, quick_config(), hooks);
        CHECK(db.partial);
        CHECK(db.abort_reason.find("backend") != std::string::npos);
        CHECK(epochs == 3);
        CHECK(db.normal_rules.empty());
    }

    TEST_CASE("the rule cap bounds the database")
    {
        auto const corpus = geometric_corpus({ .windows = 800, .window_size = 20, .abnormal_fraction = 0.1, .seed = 7 }, 6);
        auto const dataset = split_dataset(make_windows(corpus.lines, corpus.window_size, corpus.window_size));
        auto config = quick_config();
        config.max_normal_rules = 2;
        config.generalization_normal = 0.3;
        MockBackend mock;
        auto const db = run_synthesis(dataset, mock, config);
        CHECK(db.normal_rules.size() == 2);
    }

    TEST_CASE("property: filtering soundness")
    {
        std::mt19937_64 rng(41);
        static const std::vector<std::string> words { "a1", "b2", "c3", "d4", "e5" };
        for (int trial = 0; trial < 200; ++trial)
        {
            auto windows = std::vector<LogWindow> {};
            for (WindowId i = 0; i < 40; ++i)
                windows.push_back(testing::window(i, { words[rng() % words.size()] + " " + words[rng() % words.size()] }));
            auto const catalog = catalog_of(windows);
            auto state = EpochState {};
            for (WindowId i = 0; i < 40; ++i)
                if (rng() % 3)
                    state.remaining.push_back(i);
            state.initial_count = 40;
            state.clusters = { Cluster { .id = 0, .members = state.remaining, .feature = {} } };
            auto const rule = testing::rule("rule r normal \"d\" { contains(\"" + words[rng() % words.size()] + "\") }");
            auto const after = apply_rule_filter(state, rule, catalog);
            for (auto id: state.remaining)
            {
                bool const kept = std::binary_search(after.remaining.begin(), after.remaining.end(), id);
                CHECK(kept != evaluate(rule, windows[id].lines));
            }
            CHECK(after.coverage() >= state.coverage());
            for (auto const& c: after.clusters)
                CHECK(c.members.size() == after.remaining.size());
        }
    }
}
