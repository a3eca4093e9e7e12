// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/corpus.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace logrules
{

/// Sorted, duplicate-free token set.
using TokenSet = std::vector<std::string>;

[[nodiscard]] TokenSet make_token_set(std::vector<std::string> tokens);
[[nodiscard]] std::size_t intersection_size(const TokenSet& a, const TokenSet& b);
[[nodiscard]] TokenSet intersect(const TokenSet& a, const TokenSet& b);

struct WindowFeature
{
    WindowId window_id = 0;
    TokenSet tokens;
};

using ClusterId = std::uint64_t;

struct Cluster
{
    ClusterId id = 0;
    std::vector<WindowId> members; ///< ascending
    TokenSet feature;
};

struct FeatureParams
{
    std::size_t k_line = 2;
    double alpha = 0.5;
};

/// Top tokens of one line ranked by (frequency desc, first occurrence asc).
[[nodiscard]] std::vector<std::string> line_top_tokens(std::string_view line, std::size_t k_line);

/// int(alpha * avg_lines), clamped to at least 1.
[[nodiscard]] std::size_t window_token_budget(double alpha, double avg_lines);

/// Mean number of lines per window; 0 for an empty input.
[[nodiscard]] double average_window_length(std::span<const LogWindow* const> windows);

[[nodiscard]] WindowFeature window_feature(const LogWindow& window, std::size_t k_line, std::size_t k_window);
[[nodiscard]] WindowFeature window_feature(const LogWindow& window, std::size_t k_line, double alpha,
                                           double avg_lines);

/// Groups windows with identical feature sets. Cluster ids follow first appearance.
[[nodiscard]] std::vector<Cluster> initial_clusters(std::span<const WindowFeature> features);

struct MergeOptions
{
    std::size_t k_window = 10;
    std::size_t max_iters = 4; ///< m
    /// Pairs drawn per sampling pass; nullopt means 4 * #clusters.
    std::optional<std::size_t> pair_samples_per_pass;
    /// Enumerate every pair in order instead of sampling.
    bool exhaustive = false;
    std::uint64_t seed = 0;
};

/// Bottom-up merging with a relaxing overlap threshold k_window - r for
/// r = 1..m. Merged clusters keep the smaller position's id and take the
/// intersection of both features.
[[nodiscard]] std::vector<Cluster> hac_merge(std::vector<Cluster> clusters, const MergeOptions& options);

/// JSON-lines dump: {"cluster_id":..,"feature":[..],"member_ids":[..]}.
void write_clusters_jsonl(std::ostream& out, std::span<const Cluster> clusters);

} // namespace logrules
