// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logrules
{

enum class Label : std::uint8_t
{
    Normal,
    Abnormal,
};

[[nodiscard]] std::string_view to_string(Label label) noexcept;
[[nodiscard]] Label opposite(Label label) noexcept;

/// Parses "normal" / "abnormal"; throws std::invalid_argument otherwise.
[[nodiscard]] Label parse_label(std::string_view text);

using WindowId = std::uint64_t;

struct LogLine
{
    std::size_t index = 0; ///< 0-based line number in the source file
    std::string text;
    Label label = Label::Normal;
};

struct LogWindow
{
    WindowId id = 0;
    std::vector<std::string> lines;
    Label label = Label::Normal;
};

enum class LabelFormat
{
    BglDash,   ///< "- message" is normal, any other leading tag is abnormal
    TwoColumn, ///< sidecar "<file>.labels" holding one 0/1 per line
};

[[nodiscard]] LabelFormat parse_label_format(std::string_view text);

class CorpusError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Replaces invalid UTF-8 sequences with U+FFFD.
[[nodiscard]] std::string sanitize_utf8(std::string_view bytes);

/// Reads a labeled corpus. Empty lines are skipped (their sidecar labels too).
[[nodiscard]] std::vector<LogLine> load_corpus(const std::filesystem::path& path, LabelFormat format);

/// One bgl_dash line: "- text" is normal with the marker stripped, anything else abnormal and kept as is.
[[nodiscard]] LogLine parse_bgl_line(std::size_t index, std::string_view raw);

/// Empty or whitespace-only lines carry no events and are skipped by every reader.
[[nodiscard]] bool is_blank_line(std::string_view line);

/// Parses bgl_dash formatted text from a stream.
[[nodiscard]] std::vector<LogLine> read_bgl_dash(std::istream& in);

/// Locates the sidecar label file for a two-column corpus.
[[nodiscard]] std::filesystem::path sidecar_labels_path(const std::filesystem::path& corpus);

/// Groups lines into windows starting at 0, stride, 2*stride, ...
/// A window is abnormal iff it contains an abnormal line. The trailing
/// partial window is kept.
[[nodiscard]] std::vector<LogWindow> make_windows(std::span<const LogLine> lines, std::size_t window_size,
                                                  std::size_t stride);

/// Whitespace tokenization. No normalization beyond dropping empty tokens.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text);

/// Same as tokenize but returns views into `text`.
[[nodiscard]] std::vector<std::string_view> tokenize_views(std::string_view text);

enum class Split : std::uint8_t
{
    Train,
    Validation,
    Test,
};

[[nodiscard]] std::string_view to_string(Split split) noexcept;

struct SplitRatio
{
    double train = 6.0;
    double validation = 1.0;
    double test = 3.0;
};

struct Dataset
{
    std::vector<LogWindow> windows;
    std::vector<Split> split; ///< parallel to windows

    [[nodiscard]] std::vector<const LogWindow*> select(Split which) const;
    [[nodiscard]] std::size_t count(Split which) const;
};

/// Contiguous chronological split: floor(train), floor(validation), rest to test.
/// With fewer than three windows everything goes to train and a warning is logged.
[[nodiscard]] Dataset split_dataset(std::vector<LogWindow> windows, SplitRatio ratio = {});

/// Line-delimited JSON dump: {"id":..,"label":"..","lines":[..]} per window.
void write_windows_jsonl(std::ostream& out, std::span<const LogWindow> windows);

} // namespace logrules
