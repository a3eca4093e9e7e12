// SPDX-License-Identifier: Apache-2.0
#include <logrules/rule.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace logrules
{

std::string_view to_string(CmpOp op) noexcept
{
    switch (op)
    {
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
        case CmpOp::Eq: return "==";
        case CmpOp::Ne: return "!=";
    }
    return "==";
}

std::string_view to_string(Aggregate agg) noexcept
{
    switch (agg)
    {
        case Aggregate::Max: return "max";
        case Aggregate::Min: return "min";
        case Aggregate::Mean: return "mean";
        case Aggregate::Sum: return "sum";
        case Aggregate::P95: return "p95";
    }
    return "max";
}

Pattern::Pattern(std::string source): _regex(Regex::compile(source)) {}

bool Predicate::matches_line(std::string_view line) const
{
    if (is_contains())
        return line.find(needle()) != std::string_view::npos;
    return pattern().regex().search(line);
}

namespace
{

bool same_operands(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b)
{
    return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                      [](const ExprPtr& x, const ExprPtr& y) { return *x == *y; });
}

struct EqualVisitor
{
    template <typename T, typename U>
    bool operator()(const T&, const U&) const
    {
        return false;
    }

    template <typename T>
    bool operator()(const T& a, const T& b) const
    {
        if constexpr (std::is_same_v<T, ast::Not>)
            return *a.operand == *b.operand;
        else if constexpr (std::is_same_v<T, ast::And> || std::is_same_v<T, ast::Or>)
            return same_operands(a.operands, b.operands);
        else
            return a == b;
    }
};

} // namespace

bool operator==(const Expr& a, const Expr& b)
{
    return std::visit(EqualVisitor {}, a.node, b.node);
}

ExprPtr make_expr(decltype(Expr::node) node)
{
    return std::make_shared<const Expr>(Expr { std::move(node) });
}

std::size_t atom_count(const Expr& expr)
{
    if (expr.is_atom())
        return 1;
    if (auto const* n = std::get_if<ast::Not>(&expr.node))
        return atom_count(*n->operand);
    auto const& operands = std::holds_alternative<ast::And>(expr.node) ? std::get<ast::And>(expr.node).operands
                                                                        : std::get<ast::Or>(expr.node).operands;
    std::size_t total = 0;
    for (auto const& op: operands)
        total += atom_count(*op);
    return total;
}

std::size_t expr_depth(const Expr& expr)
{
    if (expr.is_atom())
        return 1;
    if (auto const* n = std::get_if<ast::Not>(&expr.node))
        return 1 + expr_depth(*n->operand);
    auto const& operands = std::holds_alternative<ast::And>(expr.node) ? std::get<ast::And>(expr.node).operands
                                                                        : std::get<ast::Or>(expr.node).operands;
    std::size_t deepest = 0;
    for (auto const& op: operands)
        deepest = std::max(deepest, expr_depth(*op));
    return 1 + deepest;
}

// ---------------------------------------------------------------------------
// Printing

std::string quote_string(std::string_view text)
{
    auto out = std::string { '"' };
    for (char c: text)
    {
        switch (c)
        {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

namespace
{

std::string regex_literal(const Pattern& pattern)
{
    auto out = std::string { '/' };
    auto const& src = pattern.source();
    for (std::size_t i = 0; i < src.size(); ++i)
    {
        if (src[i] == '\\' && i + 1 < src.size())
        {
            out.push_back(src[i]);
            out.push_back(src[++i]);
            continue;
        }
        if (src[i] == '/')
            out.push_back('\\');
        out.push_back(src[i]);
    }
    out.push_back('/');
    return out;
}

std::string print_pred(const Predicate& pred)
{
    if (pred.is_contains())
        return "contains(" + quote_string(pred.needle()) + ")";
    return "matches(" + regex_literal(pred.pattern()) + ")";
}

std::string print_number(double value)
{
    return fmt::format("{}", value);
}

void print(const Expr& expr, std::string& out);

void print_operand(const Expr& expr, bool parenthesize, std::string& out)
{
    if (parenthesize)
        out.push_back('(');
    print(expr, out);
    if (parenthesize)
        out.push_back(')');
}

void print(const Expr& expr, std::string& out)
{
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, ast::Exists>)
                out += print_pred(node.pred);
            else if constexpr (std::is_same_v<T, ast::Count>)
                out += fmt::format("count({}) {} {}", print_pred(node.pred), to_string(node.op), node.threshold);
            else if constexpr (std::is_same_v<T, ast::Ratio>)
                out += fmt::format("ratio({}) {} {}", print_pred(node.pred), to_string(node.op),
                                   print_number(node.threshold));
            else if constexpr (std::is_same_v<T, ast::All>)
                out += fmt::format("all({})", print_pred(node.pred));
            else if constexpr (std::is_same_v<T, ast::Seq>)
                out += fmt::format("seq({}, {})", print_pred(node.first), print_pred(node.second));
            else if constexpr (std::is_same_v<T, ast::Numvar>)
                out += fmt::format("numvar({}, {} {} {})", regex_literal(node.pattern), to_string(node.agg),
                                   to_string(node.op), print_number(node.threshold));
            else if constexpr (std::is_same_v<T, ast::Not>)
            {
                out += "not ";
                print_operand(*node.operand, !node.operand->is_atom()
                                                 && !std::holds_alternative<ast::Not>(node.operand->node),
                              out);
            }
            else
            {
                constexpr bool is_and = std::is_same_v<T, ast::And>;
                for (std::size_t i = 0; i < node.operands.size(); ++i)
                {
                    if (i > 0)
                        out += is_and ? " and " : " or ";
                    auto const& child = *node.operands[i];
                    bool const nested = std::holds_alternative<ast::Or>(child.node)
                                        || (is_and && std::holds_alternative<ast::And>(child.node));
                    print_operand(child, nested, out);
                }
            }
        },
        expr.node);
}

} // namespace

std::string pretty_print(const Expr& expr)
{
    auto out = std::string {};
    print(expr, out);
    return out;
}

std::string pretty_print(const Rule& rule)
{
    return fmt::format("rule {} {} {} {{ {} }}", rule.name, to_string(rule.kind), quote_string(rule.docstring),
                       pretty_print(*rule.ast));
}

std::string_view to_string(SubruleType type) noexcept
{
    switch (type)
    {
        case SubruleType::Keyword: return "keyword";
        case SubruleType::EventCount: return "event_count";
        case SubruleType::NewPattern: return "new_pattern";
        case SubruleType::Sequence: return "sequence";
        case SubruleType::Variables: return "variables";
        case SubruleType::Threshold: return "threshold";
        case SubruleType::Composition: return "composition";
        case SubruleType::Other: return "other";
    }
    return "other";
}

} // namespace logrules
