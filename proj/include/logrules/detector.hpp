// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/corpus.hpp>
#include <logrules/rule.hpp>
#include <logrules/rule_database.hpp>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace logrules
{

enum class Stage
{
    NormalDb,
    AbnormalDb,
    Default,
};

[[nodiscard]] std::string_view to_string(Stage stage) noexcept;

struct DetectionResult
{
    WindowId window_id = 0;
    Label verdict = Label::Normal;
    std::optional<std::string> matched_rule;
    Stage stage = Stage::Default;

    friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

/// Receives (stage, index within that stage's list) for every rule evaluated.
using ConsultObserver = std::function<void(Stage stage, std::size_t rule_index)>;

/// Normal rules first, then abnormal rules; unmatched windows default to normal.
class Detector
{
  public:
    explicit Detector(RuleDatabase db);

    [[nodiscard]] DetectionResult classify(WindowId id, const WindowText& text,
                                           const ConsultObserver* observer = nullptr) const;
    [[nodiscard]] DetectionResult classify(const LogWindow& window, const ConsultObserver* observer = nullptr) const;

    [[nodiscard]] const RuleDatabase& database() const noexcept { return _db; }

  private:
    RuleDatabase _db;
};

[[nodiscard]] DetectionResult classify_window(const RuleDatabase& db, const LogWindow& window,
                                              const ConsultObserver* observer = nullptr);

class StreamError: public std::runtime_error
{
  public:
    StreamError(const std::string& message, std::uint64_t byte_offset);
    [[nodiscard]] std::uint64_t byte_offset() const noexcept { return _offset; }

  private:
    std::uint64_t _offset;
};

enum class LineFormat
{
    Raw,      ///< each line is taken verbatim
    BglDash,  ///< a leading "- " label marker is stripped
};

/// Windows `in` exactly like make_windows (blank lines skipped, trailing partial windows
/// flushed) and emits one result per window in order. Memory is bounded by window_size.
std::size_t detect_stream(const Detector& detector, std::istream& in, std::size_t window_size, std::size_t stride,
                          const std::function<void(const DetectionResult&)>& sink,
                          LineFormat format = LineFormat::Raw);

struct Metrics
{
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Abnormal is the positive class; zero denominators give 0.
[[nodiscard]] Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

struct GroundTruth
{
    WindowId window_id = 0;
    Label label = Label::Normal;
};

/// Throws std::invalid_argument when ids do not align position by position.
[[nodiscard]] Metrics compute_metrics(std::span<const DetectionResult> results, std::span<const GroundTruth> truth);

/// {"window_id":..,"verdict":..,"matched_rule":..|null,"stage":..}
[[nodiscard]] std::string to_json_line(const DetectionResult& result);
[[nodiscard]] std::string to_json(const Metrics& metrics);

} // namespace logrules
