// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/corpus.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace logrules
{

/// Synthetic labeled corpora with known structure, for demos and end-to-end checks.
///
/// Every generator emits whole windows of `window_size` lines, so tumbling windows
/// over the output line up with the generated windows and `window_labels` is the
/// ground truth for them.
struct SyntheticCorpus
{
    std::vector<LogLine> lines;
    std::vector<Label> window_labels;
    std::vector<std::string> window_patterns;  ///< generator pattern name per window
    std::size_t window_size = 20;
};

struct PlantedOptions
{
    std::size_t windows = 2000;
    std::size_t window_size = 20;
    double abnormal_fraction = 0.1;
    std::uint64_t seed = 7;
};

/// Two normal patterns (heartbeat, cache flush) and two anomalies
/// (a kernel TLB error keyword, a burst of connection retries).
[[nodiscard]] SyntheticCorpus planted_corpus(const PlantedOptions& options = {});

/// Normal windows are heartbeat windows except for a `minority_fraction` share of cache-flush windows.
[[nodiscard]] SyntheticCorpus dominant_pattern_corpus(const PlantedOptions& options, double minority_fraction);

/// `patterns` normal service patterns with geometrically decreasing frequency (ratio 1/2),
/// plus keyword anomalies.
[[nodiscard]] SyntheticCorpus geometric_corpus(const PlantedOptions& options, std::size_t patterns);

/// bgl_dash text: normal lines prefixed with "- ".
void write_bgl_dash(std::ostream& out, const std::vector<LogLine>& lines);

} // namespace logrules
