// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/corpus.hpp>
#include <logrules/regex.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace logrules
{

enum class CmpOp : std::uint8_t
{
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
};

enum class Aggregate : std::uint8_t
{
    Max,
    Min,
    Mean,
    Sum,
    P95,
};

[[nodiscard]] std::string_view to_string(CmpOp op) noexcept;
[[nodiscard]] std::string_view to_string(Aggregate agg) noexcept;

template <typename T>
[[nodiscard]] bool compare(T lhs, CmpOp op, T rhs) noexcept
{
    switch (op)
    {
        case CmpOp::Lt: return lhs < rhs;
        case CmpOp::Le: return lhs <= rhs;
        case CmpOp::Gt: return lhs > rhs;
        case CmpOp::Ge: return lhs >= rhs;
        case CmpOp::Eq: return lhs == rhs;
        case CmpOp::Ne: return lhs != rhs;
    }
    return false;
}

/// A compiled regex together with its source text. Equality is by source.
class Pattern
{
  public:
    /// Throws RegexError.
    explicit Pattern(std::string source);

    [[nodiscard]] const std::string& source() const noexcept { return _regex.source(); }
    [[nodiscard]] const Regex& regex() const noexcept { return _regex; }

    friend bool operator==(const Pattern& a, const Pattern& b) { return a.source() == b.source(); }

  private:
    Regex _regex;
};

/// Line predicate: contains("...") or matches(/.../).
struct Predicate
{
    std::variant<std::string, Pattern> test;

    [[nodiscard]] bool is_contains() const noexcept { return test.index() == 0; }
    [[nodiscard]] const std::string& needle() const { return std::get<std::string>(test); }
    [[nodiscard]] const Pattern& pattern() const { return std::get<Pattern>(test); }

    [[nodiscard]] bool matches_line(std::string_view line) const;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace ast
{

/// Some line satisfies the predicate (contains / matches atoms).
struct Exists
{
    Predicate pred;
    friend bool operator==(const Exists&, const Exists&) = default;
};

struct Count
{
    Predicate pred;
    CmpOp op = CmpOp::Gt;
    std::int64_t threshold = 0;
    friend bool operator==(const Count&, const Count&) = default;
};

struct Ratio
{
    Predicate pred;
    CmpOp op = CmpOp::Gt;
    double threshold = 0.0;
    friend bool operator==(const Ratio&, const Ratio&) = default;
};

struct All
{
    Predicate pred;
    friend bool operator==(const All&, const All&) = default;
};

struct Seq
{
    Predicate first;
    Predicate second;
    friend bool operator==(const Seq&, const Seq&) = default;
};

struct Numvar
{
    Pattern pattern;
    Aggregate agg = Aggregate::Max;
    CmpOp op = CmpOp::Gt;
    double threshold = 0.0;
    friend bool operator==(const Numvar&, const Numvar&) = default;
};

struct Not
{
    ExprPtr operand;
};

/// Left-to-right chains; `(a and b) and c` stays nested.
struct And
{
    std::vector<ExprPtr> operands;
};

struct Or
{
    std::vector<ExprPtr> operands;
};

} // namespace ast

struct Expr
{
    std::variant<ast::Exists, ast::Count, ast::Ratio, ast::All, ast::Seq, ast::Numvar, ast::Not, ast::And, ast::Or>
        node;

    [[nodiscard]] bool is_atom() const noexcept { return node.index() <= 5; }
};

/// Structural equality.
[[nodiscard]] bool operator==(const Expr& a, const Expr& b);

[[nodiscard]] ExprPtr make_expr(decltype(Expr::node) node);

/// Number of atoms (leaves) in the tree.
[[nodiscard]] std::size_t atom_count(const Expr& expr);

/// Nesting depth; a lone atom has depth 1.
[[nodiscard]] std::size_t expr_depth(const Expr& expr);

inline constexpr std::size_t kMaxExprDepth = 32;

struct Provenance
{
    std::int64_t epoch = -1;
    std::int64_t rollout = -1;
    std::string transcript_id;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Rule
{
    std::string name;
    Label kind = Label::Normal;
    std::string docstring;
    ExprPtr ast;
    Provenance provenance;
};

// ---------------------------------------------------------------------------
// Parsing and printing

struct ParseError
{
    enum class Kind
    {
        Lexical,
        Syntax,
        UnsupportedRegex,
        DepthOverflow,
    };

    Kind kind = Kind::Syntax;
    std::size_t line = 1;   ///< 1-based
    std::size_t column = 1; ///< 1-based
    std::string message;
    std::string excerpt; ///< the offending source line

    /// "line:col: <kind>: message"
    [[nodiscard]] std::string describe() const;
};

[[nodiscard]] std::string_view to_string(ParseError::Kind kind) noexcept;

using ParseResult = std::variant<Rule, ParseError>;
using ParseManyResult = std::variant<std::vector<Rule>, ParseError>;

/// Parses exactly one rule (comments and whitespace allowed around it).
[[nodiscard]] ParseResult parse_rule(std::string_view source);

/// Parses a rule file holding one or more rules.
[[nodiscard]] ParseManyResult parse_rules(std::string_view source);

/// Canonical single-line form; parse_rule(pretty_print(r)) yields an equal AST.
[[nodiscard]] std::string pretty_print(const Rule& rule);
[[nodiscard]] std::string pretty_print(const Expr& expr);

/// Double-quoted string literal with backslash escapes.
[[nodiscard]] std::string quote_string(std::string_view text);

// ---------------------------------------------------------------------------
// Evaluation

/// Window lines joined with '\n' plus line offsets, built once per window
/// and reused across rules.
class WindowText
{
  public:
    WindowText() = default;
    explicit WindowText(std::span<const std::string> lines);

    void assign(std::span<const std::string> lines);

    [[nodiscard]] std::size_t line_count() const noexcept { return _starts.size(); }
    [[nodiscard]] std::string_view line(std::size_t i) const noexcept;
    [[nodiscard]] std::string_view joined() const noexcept { return _joined; }
    /// Index of the line holding byte `offset` of joined().
    [[nodiscard]] std::size_t line_of(std::size_t offset) const noexcept;

  private:
    std::string _joined;
    std::vector<std::size_t> _starts;
};

struct EvalBudget
{
    /// Upper bound on scanned bytes per evaluation; 0 disables the bound.
    std::uint64_t max_steps = 0;
};

struct EvalOutcome
{
    bool verdict = false;
    bool timed_out = false;
    std::uint64_t steps = 0;
};

/// Receives the pre-order index of every atom as it is evaluated.
using AtomObserver = std::function<void(std::size_t atom_index)>;

/// Total, deterministic evaluation. TRUE means "normal" for normal rules and
/// "abnormal" for abnormal rules.
[[nodiscard]] bool evaluate(const Rule& rule, std::span<const std::string> window);
[[nodiscard]] bool evaluate(const Expr& expr, const WindowText& window);

/// Budgeted evaluation. A budget breach sets timed_out and a false verdict.
[[nodiscard]] EvalOutcome evaluate_bounded(const Expr& expr, const WindowText& window, EvalBudget budget,
                                           const AtomObserver* observer = nullptr);

/// Values gathered by numvar: first numeric capture of the first match per line.
[[nodiscard]] std::vector<double> collect_numeric(const Pattern& pattern, const WindowText& window);

/// Aggregate over a non-empty sample; p95 is nearest-rank.
[[nodiscard]] double aggregate(Aggregate agg, std::vector<double> values);

// ---------------------------------------------------------------------------
// Static subrule classification

enum class SubruleType : std::uint8_t
{
    Keyword,
    EventCount,
    NewPattern,
    Sequence,
    Variables,
    Threshold,
    Composition,
    Other,
};

[[nodiscard]] std::string_view to_string(SubruleType type) noexcept;

/// Deduplicated subrule types in enum order.
[[nodiscard]] std::vector<SubruleType> classify_subrules(const Rule& rule);

} // namespace logrules
