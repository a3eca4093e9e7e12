// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"
#include "oracles.hpp"

#include <logrules/sampling.hpp>

#include <random>

using namespace logrules;

namespace
{

std::vector<std::string> prefix_tokens(std::string_view stem, std::size_t n)
{
    auto out = std::vector<std::string> {};
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(std::string(stem) + std::to_string(i));
    return out;
}

void add(WindowCatalog& catalog, WindowId id, std::vector<std::string> tokens, Label label = Label::Normal,
         std::vector<std::string> lines = {})
{
    if (lines.empty())
    {
        auto line = std::string {};
        for (auto const& t: tokens)
            line += t + " ";
        lines.push_back(line);
    }
    catalog.add(testing::window(id, std::move(lines), label), make_token_set(std::move(tokens)));
}

} // namespace

TEST_SUITE("sampling")
{
    TEST_CASE("diversity score examples")
    {
        CHECK(diversity_score(testing::window(0, { "a b a b" })) == doctest::Approx(0.5));
        CHECK(diversity_score(testing::window(0, { "a b", "c d" })) == doctest::Approx(1.0));
        CHECK(diversity_score(testing::window(0, { "a a", "a a" })) == doctest::Approx(0.25));
        CHECK(diversity_score(testing::window(0, {})) == 0.0);
    }

    TEST_CASE("anchor is the most diverse member with ties to the smaller id")
    {
        WindowCatalog catalog;
        add(catalog, 1, { "a" }, Label::Normal, { "a b a x y z q r s t" });   // 8 unique / 10
        add(catalog, 2, { "a" }, Label::Normal, { "a b c d e f g h i j" });   // 10 / 10
        add(catalog, 3, { "a" }, Label::Normal, { "a a b b" });               // 0.5
        add(catalog, 4, { "a" }, Label::Normal, { "c c d d" });               // 0.5
        CHECK(select_anchor(Cluster { 0, { 1, 2 }, {} }, catalog) == 2);
        CHECK(select_anchor(Cluster { 0, { 3, 4 }, {} }, catalog) == 3);
        CHECK(select_anchor(Cluster { 0, { 4 }, {} }, catalog) == 4);
    }

    TEST_CASE("jaccard examples")
    {
        CHECK(jaccard({ "a", "b", "c" }, { "a", "b", "c" }) == 1.0);
        CHECK(jaccard({ "a", "b", "c" }, { "b", "c", "d" }) == 0.5);
        CHECK(jaccard({ "a" }, { "b" }) == 0.0);
        CHECK(jaccard({}, {}) == 0.0);
    }

    TEST_CASE("same label sampling keeps members above the threshold, most similar first")
    {
        WindowCatalog catalog;
        add(catalog, 1, prefix_tokens("t", 10));
        add(catalog, 2, prefix_tokens("t", 9));  // 0.9
        add(catalog, 3, prefix_tokens("t", 5));  // 0.5
        add(catalog, 4, prefix_tokens("t", 1));  // 0.1
        auto const cluster = Cluster { 0, { 1, 2, 3, 4 }, {} };
        CHECK(sample_same_label(cluster, 1, 3, 0.2, catalog) == std::vector<WindowId> { 1, 2, 3 });
        CHECK(sample_same_label(cluster, 1, 5, 0.95, catalog) == std::vector<WindowId> { 1 });
        CHECK(sample_same_label(cluster, 1, 4, 0.2, catalog) == std::vector<WindowId> { 1, 2, 3 });
    }

    TEST_CASE("opposite label sampling ranks the pool by mean similarity")
    {
        WindowCatalog catalog;
        add(catalog, 1, prefix_tokens("x", 10));
        add(catalog, 10, prefix_tokens("x", 8), Label::Abnormal);  // 0.8
        add(catalog, 11, prefix_tokens("x", 2), Label::Abnormal);  // 0.2
        add(catalog, 12, prefix_tokens("x", 5), Label::Abnormal);  // 0.5
        add(catalog, 20, { "q" }, Label::Abnormal);
        add(catalog, 21, { "r" }, Label::Abnormal);
        auto const selected = std::vector<WindowId> { 1 };
        CHECK(sample_opposite_label(selected, std::vector<WindowId> { 10, 11, 12 }, 2, catalog) ==
              std::vector<WindowId> { 10, 12 });
        CHECK(sample_opposite_label(selected, std::vector<WindowId> { 11 }, 5, catalog) == std::vector<WindowId> { 11 });
        // Nothing similar at all still yields a contrast set.
        CHECK(sample_opposite_label(selected, std::vector<WindowId> { 21, 20 }, 1, catalog).size() == 1);
    }

    TEST_CASE("dedupe keeps the smallest id per feature set")
    {
        WindowCatalog catalog;
        add(catalog, 5, { "a", "b" });
        add(catalog, 2, { "a", "b" });
        add(catalog, 7, { "c" });
        CHECK(deduplicate_by_feature(std::vector<WindowId> { 5, 2, 7 }, catalog) == std::vector<WindowId> { 2, 7 });
    }

    TEST_CASE("contrastive group picks the largest cluster, ties to the smaller id")
    {
        WindowCatalog catalog;
        for (WindowId id = 0; id < 17; ++id)
            add(catalog, id, { "n" + std::to_string(id % 3), "common" });
        for (WindowId id = 100; id < 105; ++id)
            add(catalog, id, { "ab" + std::to_string(id), "common" }, Label::Abnormal);

        auto members = [](WindowId from, WindowId to) {
            auto v = std::vector<WindowId> {};
            for (auto i = from; i < to; ++i)
                v.push_back(i);
            return v;
        };
        auto const pool = members(100, 105);
        auto const sizes = std::vector<Cluster> { { 4, members(10, 17), {} }, { 9, members(0, 10), {} } };
        auto group = build_contrastive_group(sizes, pool, Label::Normal, {}, catalog);
        REQUIRE(group);
        CHECK(group->cluster_id == 9);
        CHECK(group->anchor_id < 10);

        auto const tie = std::vector<Cluster> { { 8, members(0, 5), {} }, { 3, members(5, 10), {} } };
        group = build_contrastive_group(tie, pool, Label::Normal, {}, catalog);
        REQUIRE(group);
        CHECK(group->cluster_id == 3);

        // mirrored: abnormal target with the normal windows as the pool
        auto const abnormal = std::vector<Cluster> { { 0, pool, {} } };
        group = build_contrastive_group(abnormal, members(0, 17), Label::Abnormal, {}, catalog);
        REQUIRE(group);
        CHECK(group->target_kind == Label::Abnormal);
        for (auto const& w: group->opposite_label_windows)
            CHECK(w.label == Label::Normal);

        CHECK_FALSE(build_contrastive_group({}, pool, Label::Normal, {}, catalog));
    }

    TEST_CASE("property: jaccard symmetry and range, diversity range")
    {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 1000; ++trial)
        {
            auto random_set = [&] {
                auto tokens = std::vector<std::string> {};
                for (std::size_t i = 0, n = rng() % 6; i < n; ++i)
                    tokens.push_back(std::string(1, static_cast<char>('a' + rng() % 8)));
                return make_token_set(tokens);
            };
            auto const a = random_set();
            auto const b = random_set();
            CHECK(jaccard(a, b) == jaccard(b, a));
            CHECK(jaccard(a, b) >= 0.0);
            CHECK(jaccard(a, b) <= 1.0);
            if (!a.empty())
                CHECK(jaccard(a, a) == 1.0);
            auto const d = diversity_score(testing::window(0, oracle::random_window(rng)));
            CHECK(d >= 0.0);
            CHECK(d <= 1.0);
        }
    }

    TEST_CASE("property: groups contain their anchor, are label pure, and anchors ignore member order")
    {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 200; ++trial)
        {
            WindowCatalog catalog;
            auto normal = std::vector<WindowId> {};
            auto abnormal = std::vector<WindowId> {};
            for (WindowId id = 0; id < 40; ++id)
            {
                auto const label = rng() % 4 == 0 ? Label::Abnormal : Label::Normal;
                auto lines = oracle::random_window(rng, 6);
                auto tokens = std::vector<std::string> {};
                for (auto const& l: lines)
                    for (auto& t: tokenize(l))
                        tokens.push_back(t);
                catalog.add(testing::window(id, lines, label), make_token_set(tokens));
                (label == Label::Normal ? normal : abnormal).push_back(id);
            }
            if (normal.empty() || abnormal.empty())
                continue;
            auto const cluster = Cluster { 0, normal, {} };
            auto shuffled = cluster;
            std::shuffle(shuffled.members.begin(), shuffled.members.end(), rng);
            CHECK(select_anchor(cluster, catalog) == select_anchor(shuffled, catalog));

            auto const group = build_contrastive_group(std::vector<Cluster> { cluster }, abnormal, Label::Normal,
                                                       SamplingParams { .w = 1 + rng() % 6, .theta_anchor = 0.2 }, catalog);
            REQUIRE(group);
            REQUIRE_FALSE(group->same_label_windows.empty());
            CHECK(group->same_label_windows.front().id == group->anchor_id);
            for (auto const& w: group->same_label_windows)
                CHECK(w.label == Label::Normal);
            for (auto const& w: group->opposite_label_windows)
                CHECK(w.label == Label::Abnormal);
        }
    }
}
