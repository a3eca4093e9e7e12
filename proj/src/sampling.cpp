// SPDX-License-Identifier: Apache-2.0
#include <logrules/sampling.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <unordered_set>

namespace logrules
{

void WindowCatalog::add(const LogWindow& window, TokenSet feature)
{
    auto [it, inserted] = _positions.try_emplace(window.id, _windows.size());
    if (!inserted)
        throw std::invalid_argument("duplicate window id " + std::to_string(window.id));
    _windows.push_back(window);
    _features.push_back(std::move(feature));
}

bool WindowCatalog::contains(WindowId id) const
{
    return _positions.contains(id);
}

std::size_t WindowCatalog::position(WindowId id) const
{
    auto it = _positions.find(id);
    if (it == _positions.end())
        throw std::out_of_range("unknown window id " + std::to_string(id));
    return it->second;
}

const LogWindow& WindowCatalog::window(WindowId id) const
{
    return _windows[position(id)];
}

const TokenSet& WindowCatalog::feature(WindowId id) const
{
    return _features[position(id)];
}

double diversity_score(const LogWindow& window)
{
    auto unique = std::unordered_set<std::string_view> {};
    std::size_t total = 0;
    for (auto const& line: window.lines)
    {
        for (auto token: tokenize_views(line))
        {
            unique.insert(token);
            ++total;
        }
    }
    if (total == 0)
        return 0.0;
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double jaccard(const TokenSet& a, const TokenSet& b)
{
    auto const shared = intersection_size(a, b);
    auto const united = a.size() + b.size() - shared;
    if (united == 0)
        return 0.0;
    return static_cast<double>(shared) / static_cast<double>(united);
}

WindowId select_anchor(const Cluster& cluster, const WindowCatalog& catalog)
{
    if (cluster.members.empty())
        throw std::invalid_argument("select_anchor: empty cluster");

    auto best = cluster.members.front();
    auto best_score = -1.0;
    for (auto id: cluster.members)
    {
        auto const score = diversity_score(catalog.window(id));
        if (score > best_score || (score == best_score && id < best))
        {
            best = id;
            best_score = score;
        }
    }
    return best;
}

namespace
{

struct Scored
{
    WindowId id = 0;
    double score = 0.0;
};

void rank(std::vector<Scored>& items)
{
    std::sort(items.begin(), items.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.id < b.id;
    });
}

} // namespace

std::vector<WindowId> sample_same_label(const Cluster& cluster, WindowId anchor_id, std::size_t w, double theta,
                                        const WindowCatalog& catalog)
{
    if (std::find(cluster.members.begin(), cluster.members.end(), anchor_id) == cluster.members.end())
        throw std::invalid_argument("sample_same_label: anchor is not a cluster member");

    auto const& anchor_feature = catalog.feature(anchor_id);
    auto candidates = std::vector<Scored> {};
    for (auto id: cluster.members)
    {
        if (id == anchor_id)
            continue;
        auto const similarity = jaccard(catalog.feature(id), anchor_feature);
        if (similarity >= theta)
            candidates.push_back(Scored { .id = id, .score = similarity });
    }
    rank(candidates);

    auto selected = std::vector<WindowId> { anchor_id };
    for (std::size_t i = 0; i < candidates.size() && selected.size() < w; ++i)
        selected.push_back(candidates[i].id);
    return selected;
}

std::vector<WindowId> sample_opposite_label(std::span<const WindowId> selected, std::span<const WindowId> pool,
                                            std::size_t w, const WindowCatalog& catalog)
{
    auto scored = std::vector<Scored> {};
    scored.reserve(pool.size());
    for (auto id: pool)
    {
        auto const& feature = catalog.feature(id);
        double sum = 0.0;
        for (auto other: selected)
            sum += jaccard(feature, catalog.feature(other));
        auto const mean = selected.empty() ? 0.0 : sum / static_cast<double>(selected.size());
        scored.push_back(Scored { .id = id, .score = mean });
    }
    rank(scored);

    auto out = std::vector<WindowId> {};
    for (std::size_t i = 0; i < scored.size() && out.size() < w; ++i)
        out.push_back(scored[i].id);
    return out;
}

std::vector<WindowId> deduplicate_by_feature(std::span<const WindowId> ids, const WindowCatalog& catalog)
{
    auto first_by_feature = std::map<TokenSet, WindowId> {};
    for (auto id: ids)
    {
        auto [it, inserted] = first_by_feature.try_emplace(catalog.feature(id), id);
        if (!inserted && id < it->second)
            it->second = id;
    }
    auto out = std::vector<WindowId> {};
    out.reserve(first_by_feature.size());
    for (auto const& [feature, id]: first_by_feature)
        out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<ContrastiveGroup> build_contrastive_group(std::span<const Cluster> clusters,
                                                        std::span<const WindowId> opposite_pool, Label target_kind,
                                                        const SamplingParams& params, const WindowCatalog& catalog)
{
    const Cluster* largest = nullptr;
    for (auto const& cluster: clusters)
    {
        if (cluster.members.empty())
            continue;
        if (largest == nullptr || cluster.members.size() > largest->members.size()
            || (cluster.members.size() == largest->members.size() && cluster.id < largest->id))
            largest = &cluster;
    }
    if (largest == nullptr)
        return std::nullopt;

    auto const anchor = select_anchor(*largest, catalog);
    auto const same = sample_same_label(*largest, anchor, params.w, params.theta_anchor, catalog);
    auto const opposite = sample_opposite_label(same, opposite_pool, params.w, catalog);

    auto group = ContrastiveGroup { .target_kind = target_kind, .cluster_id = largest->id, .anchor_id = anchor, .same_label_windows = {},
                                    .opposite_label_windows = {} };
    for (auto id: same)
        group.same_label_windows.push_back(catalog.window(id));
    for (auto id: opposite)
        group.opposite_label_windows.push_back(catalog.window(id));
    return group;
}

void write_group_jsonl(std::ostream& out, const ContrastiveGroup& group)
{
    auto ids = [](const std::vector<LogWindow>& windows) {
        auto v = std::vector<WindowId> {};
        for (auto const& w: windows)
            v.push_back(w.id);
        return v;
    };
    auto record = nlohmann::ordered_json {
        { "target_kind", to_string(group.target_kind) },
        { "cluster_id", group.cluster_id },
        { "anchor_id", group.anchor_id },
        { "same_label_ids", ids(group.same_label_windows) },
        { "opposite_label_ids", ids(group.opposite_label_windows) },
    };
    out << record.dump() << '\n';
}

} // namespace logrules
