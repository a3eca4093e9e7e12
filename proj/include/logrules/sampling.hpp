// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/clustering.hpp>
#include <logrules/corpus.hpp>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace logrules
{

/// Id-addressed store of windows together with their token features.
class WindowCatalog
{
  public:
    WindowCatalog() = default;

    void add(const LogWindow& window, TokenSet feature);

    [[nodiscard]] bool contains(WindowId id) const;
    [[nodiscard]] const LogWindow& window(WindowId id) const;
    [[nodiscard]] const TokenSet& feature(WindowId id) const;
    [[nodiscard]] std::size_t size() const noexcept { return _windows.size(); }

  private:
    [[nodiscard]] std::size_t position(WindowId id) const;

    std::vector<LogWindow> _windows;
    std::vector<TokenSet> _features;
    std::unordered_map<WindowId, std::size_t> _positions;
};

struct ContrastiveGroup
{
    Label target_kind = Label::Normal;
    ClusterId cluster_id = 0;
    WindowId anchor_id = 0;
    std::vector<LogWindow> same_label_windows;     ///< anchor first
    std::vector<LogWindow> opposite_label_windows;
};

struct SamplingParams
{
    std::size_t w = 5;
    double theta_anchor = 0.2;
};

/// Unique tokens over total tokens across all lines; 0 for a window without tokens.
[[nodiscard]] double diversity_score(const LogWindow& window);

/// |a ∩ b| / |a ∪ b|; 0 when both are empty.
[[nodiscard]] double jaccard(const TokenSet& a, const TokenSet& b);

/// Most diverse member; ties go to the smaller id.
[[nodiscard]] WindowId select_anchor(const Cluster& cluster, const WindowCatalog& catalog);

/// Anchor plus up to w-1 members with jaccard >= theta, most similar first.
[[nodiscard]] std::vector<WindowId> sample_same_label(const Cluster& cluster, WindowId anchor_id, std::size_t w,
                                                      double theta, const WindowCatalog& catalog);

/// Top-w pool windows by mean jaccard against the selected windows.
[[nodiscard]] std::vector<WindowId> sample_opposite_label(std::span<const WindowId> selected,
                                                          std::span<const WindowId> pool, std::size_t w,
                                                          const WindowCatalog& catalog);

/// Keeps the smallest id per distinct feature set.
[[nodiscard]] std::vector<WindowId> deduplicate_by_feature(std::span<const WindowId> ids,
                                                           const WindowCatalog& catalog);

/// Largest cluster (ties: smaller id) -> anchor -> same side -> opposite side.
/// Returns nullopt when there is no non-empty cluster.
[[nodiscard]] std::optional<ContrastiveGroup> build_contrastive_group(std::span<const Cluster> clusters,
                                                                      std::span<const WindowId> opposite_pool,
                                                                      Label target_kind,
                                                                      const SamplingParams& params,
                                                                      const WindowCatalog& catalog);

/// Debug dump of a group as one JSON object per line.
void write_group_jsonl(std::ostream& out, const ContrastiveGroup& group);

} // namespace logrules
