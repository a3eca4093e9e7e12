// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"
#include "oracles.hpp"

#include <logrules/detector.hpp>

#include <nlohmann/json.hpp>

#include <random>
#include <sstream>

using namespace logrules;

namespace
{

RuleDatabase cascade_db()
{
    auto db = RuleDatabase {};
    for (auto const* source: {
             R"(rule n1 normal "d" { contains("alpha") })",
             R"(rule n2 normal "d" { contains("beta") })",
             R"(rule n3 normal "d" { contains("shared") })",
             R"(rule a1 abnormal "d" { contains("shared") })",
             R"(rule a2 abnormal "d" { contains("fatal") })",
         })
        db.add(StoredRule { .rule = testing::rule(source), .validation_coverage = 1.0 });
    return db;
}

struct Consulted
{
    std::vector<std::pair<Stage, std::size_t>> calls;
    ConsultObserver observer = [this](Stage s, std::size_t i) { calls.emplace_back(s, i); };
};

std::string join_lines(const std::vector<LogLine>& lines, bool dash)
{
    auto out = std::string {};
    for (auto const& l: lines)
        out += (dash && l.label == Label::Normal ? "- " : "") + l.text + "\n";
    return out;
}

} // namespace

TEST_SUITE("detector")
{
    TEST_CASE("cascade examples")
    {
        auto const db = cascade_db();
        Consulted c;
        auto const both = classify_window(db, testing::window(0, { "x", "shared state" }), &c.observer);
        CHECK(both.verdict == Label::Normal);
        CHECK(both.stage == Stage::NormalDb);
        CHECK(both.matched_rule == "n3");
        for (auto const& [stage, _]: c.calls)
            CHECK(stage == Stage::NormalDb);

        auto const bad = classify_window(db, testing::window(1, { "fatal error" }));
        CHECK(bad.verdict == Label::Abnormal);
        CHECK(bad.stage == Stage::AbnormalDb);
        CHECK(bad.matched_rule == "a2");

        Consulted none;
        auto const nothing = classify_window(db, testing::window(2, { "quiet" }), &none.observer);
        CHECK(nothing.verdict == Label::Normal);
        CHECK(nothing.stage == Stage::Default);
        CHECK_FALSE(nothing.matched_rule);
        CHECK(none.calls.size() == 5);
        CHECK(nothing.window_id == 2);

        auto const detector = Detector(db);
        CHECK(detector.classify(testing::window(1, { "fatal error" })) == bad);
    }

    TEST_CASE("metric examples")
    {
        auto const perfect = metrics_from_counts(1, 0, 0, 5);
        CHECK(perfect.precision == 1.0);
        CHECK(perfect.recall == 1.0);
        CHECK(perfect.f1 == 1.0);

        auto const mixed = metrics_from_counts(2, 1, 2, 0);
        CHECK(mixed.precision == doctest::Approx(2.0 / 3.0));
        CHECK(mixed.recall == doctest::Approx(0.5));
        CHECK(mixed.f1 == doctest::Approx(4.0 / 7.0));

        auto const empty = metrics_from_counts(0, 0, 0, 9);
        CHECK(empty.precision == 0.0);
        CHECK(empty.recall == 0.0);
        CHECK(empty.f1 == 0.0);
    }

    TEST_CASE("property: f1 agrees with the count form on random tables")
    {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 200; ++trial)
        {
            auto const tp = rng() % 50, fp = rng() % 50, fn = rng() % 50, tn = rng() % 50;
            auto const m = metrics_from_counts(tp, fp, fn, tn);
            auto const expected = tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
            CHECK(m.f1 == doctest::Approx(expected).epsilon(1e-12));
            CHECK(m.precision >= 0.0);
            CHECK(m.precision <= 1.0);
            CHECK(m.recall >= 0.0);
            CHECK(m.recall <= 1.0);
        }
    }

    TEST_CASE("compute metrics aligns results with the truth")
    {
        auto const results = std::vector<DetectionResult> {
            { .window_id = 0, .verdict = Label::Abnormal, .matched_rule = "a", .stage = Stage::AbnormalDb },
            { .window_id = 1, .verdict = Label::Abnormal, .matched_rule = "a", .stage = Stage::AbnormalDb },
            { .window_id = 2, .verdict = Label::Normal },
            { .window_id = 3, .verdict = Label::Normal },
        };
        auto const truth = std::vector<GroundTruth> {
            { 0, Label::Abnormal }, { 1, Label::Normal }, { 2, Label::Abnormal }, { 3, Label::Normal } };
        auto const m = compute_metrics(results, truth);
        CHECK(m.tp == 1);
        CHECK(m.fp == 1);
        CHECK(m.fn == 1);
        CHECK(m.tn == 1);

        auto shifted = truth;
        shifted[2].window_id = 9;
        CHECK_THROWS_AS((void)compute_metrics(results, shifted), std::invalid_argument);
        CHECK_THROWS_AS((void)compute_metrics(results, std::span(truth).first(2)), std::invalid_argument);
    }

    TEST_CASE("json output formats")
    {
        auto const line = to_json_line({ .window_id = 4, .verdict = Label::Abnormal, .matched_rule = "a2", .stage = Stage::AbnormalDb });
        CHECK(line == R"({"window_id":4,"verdict":"abnormal","matched_rule":"a2","stage":"abnormal_db"})");
        CHECK(to_json_line({ .window_id = 0 }) == R"({"window_id":0,"verdict":"normal","matched_rule":null,"stage":"default"})");
        auto const metrics = nlohmann::json::parse(to_json(metrics_from_counts(2, 1, 2, 0)));
        for (auto const* key: { "tp", "fp", "fn", "tn", "precision", "recall", "f1" })
            CHECK(metrics.contains(key));
    }

    TEST_CASE("forty lines in tumbling windows of twenty give two results")
    {
        auto text = std::string {};
        for (int i = 0; i < 40; ++i)
            text += "line " + std::to_string(i) + "\n";
        auto in = std::istringstream(text);
        auto results = std::vector<DetectionResult> {};
        auto const n = detect_stream(Detector(cascade_db()), in, 20, 20, [&](const DetectionResult& r) { results.push_back(r); });
        CHECK(n == 2);
        REQUIRE(results.size() == 2);
        CHECK(results[0].window_id == 0);
        CHECK(results[1].window_id == 1);
        CHECK_THROWS_AS(detect_stream(Detector(cascade_db()), in, 0, 1, [](const DetectionResult&) {}), std::invalid_argument);
    }

    TEST_CASE("property: streaming equals batch windowing")
    {
        std::mt19937_64 rng(64);
        auto const detector = Detector(cascade_db());
        static const std::vector<std::string> words { "alpha", "beta", "shared", "fatal", "calm", "noise" };
        for (int trial = 0; trial < 300; ++trial)
        {
            auto lines = std::vector<LogLine> {};
            for (std::size_t i = 0, n = rng() % 90; i < n; ++i)
                lines.push_back({ .index = i, .text = words[rng() % words.size()] + " " + std::to_string(rng() % 100),
                                  .label = rng() % 5 ? Label::Normal : Label::Abnormal });
            auto const size = 1 + rng() % 25;
            auto const stride = 1 + rng() % 30;
            bool const dash = rng() % 2;

            auto expected = std::vector<DetectionResult> {};
            for (auto const& w: make_windows(lines, size, stride))
                expected.push_back(detector.classify(w));

            auto text = join_lines(lines, dash);
            // blank lines are skipped on both paths
            if (rng() % 3 == 0)
                text = "\n   \n" + text;
            auto in = std::istringstream(text);
            auto got = std::vector<DetectionResult> {};
            detect_stream(detector, in, size, stride, [&](const DetectionResult& r) { got.push_back(r); },
                          dash ? LineFormat::BglDash : LineFormat::Raw);
            // the dash marker is stripped, so both formats see the same line text
            CHECK(got == expected);
        }
    }

    TEST_CASE("property: cascade precedence and default-normal")
    {
        std::mt19937_64 rng(1000);
        for (int trial = 0; trial < 1000; ++trial)
        {
            auto db = RuleDatabase {};
            for (std::size_t i = 0, n = rng() % 5; i < n; ++i)
            {
                auto rule = oracle::random_rule(rng, 3);
                rule.kind = Label::Normal;
                db.add(StoredRule { .rule = rule });
            }
            for (std::size_t i = 0, n = rng() % 5; i < n; ++i)
            {
                auto rule = oracle::random_rule(rng, 3);
                rule.kind = Label::Abnormal;
                db.add(StoredRule { .rule = rule });
            }
            auto const window = testing::window(trial, oracle::random_window(rng));
            Consulted c;
            auto const r = classify_window(db, window, &c.observer);

            // independent oracle: first normal rule that holds, then first abnormal rule
            auto expected_stage = Stage::Default;
            auto expected_name = std::optional<std::string> {};
            for (auto kind: { Label::Normal, Label::Abnormal })
            {
                for (auto const& s: db.rules(kind))
                    if (std::vector<std::size_t> visited; oracle::Reference(window.lines).eval(*s.rule.ast, 0, visited))
                    {
                        expected_stage = kind == Label::Normal ? Stage::NormalDb : Stage::AbnormalDb;
                        expected_name = s.rule.name;
                        break;
                    }
                if (expected_name)
                    break;
            }
            CHECK(r.stage == expected_stage);
            CHECK(r.matched_rule == expected_name);

            if (r.stage == Stage::NormalDb)
                for (auto const& [stage, _]: c.calls)
                    CHECK(stage == Stage::NormalDb);
            if (r.verdict == Label::Abnormal)
                CHECK(r.matched_rule.has_value());
            if (!r.matched_rule)
            {
                CHECK(r.verdict == Label::Normal);
                CHECK(r.stage == Stage::Default);
            }
        }
    }
}
