// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logrules
{

/// Raised for malformed patterns or for features outside the linear-time subset.
class RegexError: public std::runtime_error
{
  public:
    enum class Kind
    {
        Syntax,
        Unsupported,
    };

    RegexError(Kind kind, std::size_t offset, const std::string& message);

    [[nodiscard]] Kind kind() const noexcept { return _kind; }
    [[nodiscard]] std::size_t offset() const noexcept { return _offset; }

  private:
    Kind _kind;
    std::size_t _offset;
};

struct RegexMatch
{
    /// Group 0 is the whole match; unset groups did not participate.
    std::vector<std::optional<std::string_view>> groups;
};

/// Byte-oriented regular expressions restricted to constructs that admit
/// worst-case linear matching: literals, '.', classes, \d\w\s (and negations),
/// alternation, greedy/lazy repetition, capturing and (?:) groups, ^ $ \b \B.
/// Backreferences, lookaround, named groups and inline flags are rejected.
///
/// Existence checks run on a DFA built at compile time; capture extraction
/// uses a Pike VM with leftmost-first (Perl-style) priorities. Instances are
/// immutable and safe to share across threads.
class Regex
{
  public:
    /// Throws RegexError.
    [[nodiscard]] static Regex compile(std::string_view pattern);

    [[nodiscard]] const std::string& source() const noexcept;
    [[nodiscard]] std::size_t capture_count() const noexcept;

    /// True if the pattern matches anywhere in `text` (unanchored).
    [[nodiscard]] bool search(std::string_view text) const;

    /// Leftmost-first match with capture groups.
    [[nodiscard]] std::optional<RegexMatch> find(std::string_view text) const;

    /// True when a compiled DFA backs search().
    [[nodiscard]] bool has_dfa() const noexcept;

    /// Literal that every match must contain (may be empty).
    [[nodiscard]] const std::string& required_literal() const noexcept;

    /// Pike VM existence check, bypassing the DFA and literal prefilter.
    [[nodiscard]] bool search_nfa(std::string_view text) const;

  private:
    struct Program;
    explicit Regex(std::shared_ptr<const Program> program);

    std::shared_ptr<const Program> _program;
};

} // namespace logrules
