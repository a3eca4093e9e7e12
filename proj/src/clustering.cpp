// SPDX-License-Identifier: Apache-2.0
#include <logrules/clustering.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <unordered_map>

namespace logrules
{

TokenSet make_token_set(std::vector<std::string> tokens)
{
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

std::size_t intersection_size(const TokenSet& a, const TokenSet& b)
{
    std::size_t shared = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end())
    {
        if (*ia < *ib)
            ++ia;
        else if (*ib < *ia)
            ++ib;
        else
        {
            ++shared;
            ++ia;
            ++ib;
        }
    }
    return shared;
}

TokenSet intersect(const TokenSet& a, const TokenSet& b)
{
    auto out = TokenSet {};
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

namespace
{

struct RankedToken
{
    std::string_view token;
    std::size_t count = 0;
    std::size_t first = 0;
};

/// Frequency-desc, first-occurrence-asc ranking of a token stream.
class TokenRanking
{
  public:
    void add(std::string_view token, std::size_t weight = 1)
    {
        auto [it, inserted] = _index.try_emplace(token, _entries.size());
        if (inserted)
            _entries.push_back(RankedToken { .token = token, .count = 0, .first = _entries.size() });
        _entries[it->second].count += weight;
    }

    [[nodiscard]] std::vector<std::string> top(std::size_t k)
    {
        std::stable_sort(_entries.begin(), _entries.end(), [](const RankedToken& a, const RankedToken& b) {
            if (a.count != b.count)
                return a.count > b.count;
            return a.first < b.first;
        });
        auto out = std::vector<std::string> {};
        for (std::size_t i = 0; i < _entries.size() && i < k; ++i)
            out.emplace_back(_entries[i].token);
        return out;
    }

  private:
    std::vector<RankedToken> _entries;
    std::unordered_map<std::string_view, std::size_t> _index;
};

} // namespace

std::vector<std::string> line_top_tokens(std::string_view line, std::size_t k_line)
{
    auto ranking = TokenRanking {};
    for (auto token: tokenize_views(line))
        ranking.add(token);
    return ranking.top(k_line);
}

std::size_t window_token_budget(double alpha, double avg_lines)
{
    auto const raw = static_cast<long long>(alpha * avg_lines);
    return static_cast<std::size_t>(std::max<long long>(raw, 1));
}

double average_window_length(std::span<const LogWindow* const> windows)
{
    if (windows.empty())
        return 0.0;
    std::size_t total = 0;
    for (auto const* window: windows)
        total += window->lines.size();
    return static_cast<double>(total) / static_cast<double>(windows.size());
}

WindowFeature window_feature(const LogWindow& window, std::size_t k_line, std::size_t k_window)
{
    // Per-line top tokens must outlive the ranking's string_views.
    auto per_line = std::vector<std::vector<std::string>> {};
    per_line.reserve(window.lines.size());
    for (auto const& line: window.lines)
        per_line.push_back(line_top_tokens(line, k_line));

    auto ranking = TokenRanking {};
    for (auto const& tokens: per_line)
        for (auto const& token: tokens)
            ranking.add(token);

    return WindowFeature { .window_id = window.id, .tokens = make_token_set(ranking.top(k_window)) };
}

WindowFeature window_feature(const LogWindow& window, std::size_t k_line, double alpha, double avg_lines)
{
    return window_feature(window, k_line, window_token_budget(alpha, avg_lines));
}

std::vector<Cluster> initial_clusters(std::span<const WindowFeature> features)
{
    auto clusters = std::vector<Cluster> {};
    auto by_feature = std::map<TokenSet, std::size_t> {};
    for (auto const& feature: features)
    {
        auto [it, inserted] = by_feature.try_emplace(feature.tokens, clusters.size());
        if (inserted)
            clusters.push_back(Cluster { .id = clusters.size(), .members = {}, .feature = feature.tokens });
        clusters[it->second].members.push_back(feature.window_id);
    }
    for (auto& cluster: clusters)
        std::sort(cluster.members.begin(), cluster.members.end());
    return clusters;
}

namespace
{

void merge_into(std::vector<Cluster>& clusters, std::size_t keep, std::size_t drop)
{
    auto& target = clusters[keep];
    auto& source = clusters[drop];
    auto members = std::vector<WindowId> {};
    members.reserve(target.members.size() + source.members.size());
    std::merge(target.members.begin(), target.members.end(), source.members.begin(), source.members.end(),
               std::back_inserter(members));
    target.members = std::move(members);
    target.feature = intersect(target.feature, source.feature);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(drop));
}

bool exhaustive_pass(std::vector<Cluster>& clusters, std::size_t threshold)
{
    bool merged = false;
    for (std::size_t i = 0; i < clusters.size(); ++i)
    {
        std::size_t j = i + 1;
        while (j < clusters.size())
        {
            if (intersection_size(clusters[i].feature, clusters[j].feature) >= threshold)
            {
                merge_into(clusters, i, j);
                merged = true;
                // i's feature shrank; pairs (i, <j) stay unmergeable, so scanning resumes at j.
            }
            else
            {
                ++j;
            }
        }
    }
    return merged;
}

bool sampled_pass(std::vector<Cluster>& clusters, std::size_t threshold, std::size_t budget, std::mt19937_64& rng)
{
    bool merged = false;
    for (std::size_t draw = 0; draw < budget && clusters.size() >= 2; ++draw)
    {
        auto const n = clusters.size();
        auto a = static_cast<std::size_t>(rng() % n);
        auto b = static_cast<std::size_t>(rng() % (n - 1));
        if (b >= a)
            ++b;
        auto const keep = std::min(a, b);
        auto const drop = std::max(a, b);
        if (intersection_size(clusters[keep].feature, clusters[drop].feature) >= threshold)
        {
            merge_into(clusters, keep, drop);
            merged = true;
        }
    }
    return merged;
}

} // namespace

std::vector<Cluster> hac_merge(std::vector<Cluster> clusters, const MergeOptions& options)
{
    if (options.max_iters == 0)
        throw std::invalid_argument("hac_merge: max_iters must be >= 1");

    auto rng = std::mt19937_64(options.seed);
    // Thresholds stop at 1: a zero-overlap threshold would merge disjoint clusters.
    auto const last_r = std::min(options.max_iters, options.k_window > 0 ? options.k_window - 1 : 0);
    for (std::size_t r = 1; r <= last_r; ++r)
    {
        auto const threshold = options.k_window - r;
        while (clusters.size() >= 2)
        {
            bool merged = false;
            if (options.exhaustive)
            {
                merged = exhaustive_pass(clusters, threshold);
            }
            else
            {
                auto const budget = options.pair_samples_per_pass.value_or(4 * clusters.size());
                merged = sampled_pass(clusters, threshold, budget, rng);
            }
            if (!merged)
                break;
        }
    }
    return clusters;
}

void write_clusters_jsonl(std::ostream& out, std::span<const Cluster> clusters)
{
    for (auto const& cluster: clusters)
    {
        auto record = nlohmann::ordered_json {
            { "cluster_id", cluster.id },
            { "feature", cluster.feature },
            { "member_ids", cluster.members },
        };
        out << record.dump() << '\n';
    }
}

} // namespace logrules
