// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used as test oracles. They favor
// obviousness over speed and share no code paths with the library beyond
// the AST data types.
#pragma once

#include <logrules/clustering.hpp>
#include <logrules/rule.hpp>
#include <logrules/sampling.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace oracle
{

using namespace logrules;

// ---------------------------------------------------------------------------
// Clustering

inline std::set<std::string> as_set(const TokenSet& tokens)
{
    return { tokens.begin(), tokens.end() };
}

inline std::size_t overlap(const TokenSet& a, const TokenSet& b)
{
    auto const sa = as_set(a);
    std::size_t shared = 0;
    for (auto const& t: as_set(b))
        shared += sa.count(t);
    return shared;
}

/// All-pairs agglomeration: always merge the first (i, j) pair in index order
/// whose overlap reaches the threshold, then start the search over.
inline std::vector<Cluster> hac_all_pairs(std::vector<Cluster> clusters, std::size_t k_window, std::size_t max_iters)
{
    for (std::size_t r = 1; r <= max_iters && r < k_window; ++r)
    {
        auto const threshold = k_window - r;
        for (;;)
        {
            bool found = false;
            for (std::size_t i = 0; i < clusters.size() && !found; ++i)
                for (std::size_t j = i + 1; j < clusters.size() && !found; ++j)
                {
                    if (overlap(clusters[i].feature, clusters[j].feature) < threshold)
                        continue;
                    auto members = clusters[i].members;
                    members.insert(members.end(), clusters[j].members.begin(), clusters[j].members.end());
                    std::sort(members.begin(), members.end());
                    auto feature = TokenSet {};
                    auto const sj = as_set(clusters[j].feature);
                    for (auto const& t: clusters[i].feature)
                        if (sj.count(t))
                            feature.push_back(t);
                    std::sort(feature.begin(), feature.end());
                    clusters[i].members = std::move(members);
                    clusters[i].feature = std::move(feature);
                    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(j));
                    found = true;
                }
            if (!found)
                break;
        }
    }
    return clusters;
}

// ---------------------------------------------------------------------------
// DSL reference evaluator (std::regex for patterns, per-line scans only)

inline std::regex compile_std(const Pattern& pattern)
{
    return std::regex(pattern.source(), std::regex::ECMAScript);
}

inline bool pred_holds(const Predicate& pred, const std::string& line)
{
    if (pred.is_contains())
        return line.find(pred.needle()) != std::string::npos;
    return std::regex_search(line, compile_std(pred.pattern()));
}

inline bool cmp(double lhs, CmpOp op, double rhs)
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

inline std::vector<double> numeric_values(const Pattern& pattern, const std::vector<std::string>& lines)
{
    auto const re = compile_std(pattern);
    auto values = std::vector<double> {};
    for (auto const& line: lines)
    {
        std::smatch m;
        if (!std::regex_search(line, m, re))
            continue;
        auto const first = m.size() > 1 ? 1u : 0u;
        for (std::size_t g = first; g < m.size(); ++g)
        {
            if (!m[g].matched)
                continue;
            auto text = m[g].str();
            if (!text.empty() && text[0] == '+')
                text.erase(0, 1);
            if (text.empty() || std::isspace(static_cast<unsigned char>(text[0])))
                continue;
            char* end = nullptr;
            auto const value = std::strtod(text.c_str(), &end);
            // strtod also accepts hex, inf and nan spellings; keep plain decimal forms only.
            bool plain = text.find_first_of("xXiInN") == std::string::npos;
            if (end == text.c_str() + text.size() && plain && std::isfinite(value))
            {
                values.push_back(value);
                break;
            }
        }
    }
    return values;
}

inline double reference_aggregate(Aggregate agg, std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    switch (agg)
    {
        case Aggregate::Max: return v.back();
        case Aggregate::Min: return v.front();
        case Aggregate::Sum:
        {
            double s = 0;
            for (auto x: v)
                s += x;
            return s;
        }
        case Aggregate::Mean:
        {
            double s = 0;
            for (auto x: v)
                s += x;
            return s / static_cast<double>(v.size());
        }
        case Aggregate::P95:
        {
            // nearest rank: smallest value with at least 95% of the sample at or below it
            for (std::size_t i = 0; i < v.size(); ++i)
                if (100 * (i + 1) >= 95 * v.size())
                    return v[i];
            return v.back();
        }
    }
    return 0;
}

inline std::size_t count_atoms(const Expr& e)
{
    if (auto const* n = std::get_if<ast::Not>(&e.node))
        return count_atoms(*n->operand);
    if (auto const* a = std::get_if<ast::And>(&e.node))
    {
        std::size_t c = 0;
        for (auto const& op: a->operands)
            c += count_atoms(*op);
        return c;
    }
    if (auto const* o = std::get_if<ast::Or>(&e.node))
    {
        std::size_t c = 0;
        for (auto const& op: o->operands)
            c += count_atoms(*op);
        return c;
    }
    return 1;
}

/// Tree-walking evaluator that records the pre-order index of every atom it evaluates.
class Reference
{
  public:
    explicit Reference(const std::vector<std::string>& lines): _lines(lines) {}

    bool eval(const Expr& e, std::size_t first_atom, std::vector<std::size_t>& visited) const
    {
        if (auto const* n = std::get_if<ast::Not>(&e.node))
            return !eval(*n->operand, first_atom, visited);
        if (auto const* a = std::get_if<ast::And>(&e.node))
        {
            auto index = first_atom;
            for (auto const& op: a->operands)
            {
                if (!eval(*op, index, visited))
                    return false;
                index += count_atoms(*op);
            }
            return true;
        }
        if (auto const* o = std::get_if<ast::Or>(&e.node))
        {
            auto index = first_atom;
            for (auto const& op: o->operands)
            {
                if (eval(*op, index, visited))
                    return true;
                index += count_atoms(*op);
            }
            return false;
        }
        visited.push_back(first_atom);
        return atom(e);
    }

  private:
    std::size_t count_lines(const Predicate& p) const
    {
        std::size_t c = 0;
        for (auto const& line: _lines)
            c += pred_holds(p, line) ? 1 : 0;
        return c;
    }

    bool atom(const Expr& e) const
    {
        if (auto const* x = std::get_if<ast::Exists>(&e.node))
            return count_lines(x->pred) > 0;
        if (auto const* x = std::get_if<ast::Count>(&e.node))
            return cmp(static_cast<double>(count_lines(x->pred)), x->op, static_cast<double>(x->threshold));
        if (auto const* x = std::get_if<ast::Ratio>(&e.node))
        {
            auto const r = _lines.empty() ? 0.0
                                          : static_cast<double>(count_lines(x->pred)) / static_cast<double>(_lines.size());
            return cmp(r, x->op, x->threshold);
        }
        if (auto const* x = std::get_if<ast::All>(&e.node))
            return count_lines(x->pred) == _lines.size();
        if (auto const* x = std::get_if<ast::Seq>(&e.node))
        {
            for (std::size_t i = 0; i < _lines.size(); ++i)
                if (pred_holds(x->first, _lines[i]))
                {
                    for (std::size_t j = i + 1; j < _lines.size(); ++j)
                        if (pred_holds(x->second, _lines[j]))
                            return true;
                    return false;
                }
            return false;
        }
        if (auto const* x = std::get_if<ast::Numvar>(&e.node))
        {
            auto values = numeric_values(x->pattern, _lines);
            if (values.empty())
                return false;
            return cmp(reference_aggregate(x->agg, values), x->op, x->threshold);
        }
        return false;
    }

    const std::vector<std::string>& _lines;
};

// ---------------------------------------------------------------------------
// Random generators

inline const std::vector<std::string>& vocabulary()
{
    static const std::vector<std::string> words { "ERROR", "WARN", "INFO", "disk", "full", "code=12", "code=-7",
                                                  "t=5ms", "t=130ms", "retry", "ok", "a\"q", "x\\y", "KERN" };
    return words;
}

inline std::string random_line(std::mt19937_64& rng)
{
    auto const& words = vocabulary();
    auto line = std::string {};
    auto const n = rng() % 5;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (i)
            line += rng() % 5 == 0 ? "  " : " ";
        line += words[rng() % words.size()];
    }
    return line;
}

inline std::vector<std::string> random_window(std::mt19937_64& rng, std::size_t max_lines = 12)
{
    auto lines = std::vector<std::string> {};
    auto const n = rng() % (max_lines + 1);
    for (std::size_t i = 0; i < n; ++i)
        lines.push_back(random_line(rng));
    return lines;
}

inline Predicate random_pred(std::mt19937_64& rng)
{
    static const std::vector<std::string> needles { "ERROR", "WARN", "disk", "code=", "ms", "ok", "a\"q", "x\\y", "", " " };
    static const std::vector<std::string> patterns { "ERR(OR)?", "^WARN", "disk\\s+full", "code=-?\\d+", "[a-c]x",
                                                     "\\d+ms$", "\\bok\\b", "(INFO|KERN) [a-z]+", "^$", "t=1\\d*",
                                                     "a\"q", "x\\\\y" };
    if (rng() % 2 == 0)
        return Predicate { needles[rng() % needles.size()] };
    return Predicate { Pattern(patterns[rng() % patterns.size()]) };
}

inline CmpOp random_op(std::mt19937_64& rng)
{
    return static_cast<CmpOp>(rng() % 6);
}

inline ExprPtr random_expr(std::mt19937_64& rng, std::size_t depth)
{
    auto const choice = depth == 0 ? rng() % 6 : rng() % 9;
    switch (choice)
    {
        case 0: return make_expr(ast::Exists { random_pred(rng) });
        case 1:
            return make_expr(ast::Count { random_pred(rng), random_op(rng),
                                          static_cast<std::int64_t>(rng() % 8) - 1 });
        case 2:
        {
            // mix of exactly representable and arbitrary thresholds
            auto const t = rng() % 2 ? static_cast<double>(rng() % 9) / 8.0
                                     : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            return make_expr(ast::Ratio { random_pred(rng), random_op(rng), t });
        }
        case 3: return make_expr(ast::All { random_pred(rng) });
        case 4: return make_expr(ast::Seq { random_pred(rng), random_pred(rng) });
        case 5:
        {
            static const std::vector<std::string> numeric { "code=(-?\\d+)", "t=(\\d+)ms", "(\\d+)", "code=(\\d+)|t=(\\d+)" };
            auto const threshold = static_cast<double>(static_cast<int>(rng() % 300) - 20) / 2.0;
            return make_expr(ast::Numvar { Pattern(numeric[rng() % numeric.size()]), static_cast<Aggregate>(rng() % 5),
                                           random_op(rng), threshold });
        }
        case 6: return make_expr(ast::Not { random_expr(rng, depth - 1) });
        case 7:
        case 8:
        {
            auto operands = std::vector<ExprPtr> {};
            auto const n = 2 + rng() % 2;
            for (std::size_t i = 0; i < n; ++i)
                operands.push_back(random_expr(rng, depth - 1));
            if (choice == 7)
                return make_expr(ast::And { std::move(operands) });
            return make_expr(ast::Or { std::move(operands) });
        }
    }
    return make_expr(ast::Exists { Predicate { std::string("x") } });
}

inline Rule random_rule(std::mt19937_64& rng, std::size_t depth = 4)
{
    return Rule { .name = "r" + std::to_string(rng() % 1000),
                  .kind = rng() % 2 ? Label::Normal : Label::Abnormal,
                  .docstring = "random \"rule\"",
                  .ast = random_expr(rng, depth),
                  .provenance = {} };
}

// ---------------------------------------------------------------------------
// Mock backend oracle

/// Every whitespace token that occurs in each target window and in no opposite window.
inline std::vector<std::string> separating_tokens(const std::vector<LogWindow>& target,
                                                  const std::vector<LogWindow>& opposite)
{
    auto in_window = [](const LogWindow& w, const std::string& token) {
        for (auto const& line: w.lines)
            if (line.find(token) != std::string::npos)
                return true;
        return false;
    };
    auto candidates = std::set<std::string> {};
    for (auto const& w: target)
        for (auto const& line: w.lines)
        {
            auto start = std::size_t { 0 };
            while (start < line.size())
            {
                auto const end = line.find(' ', start);
                auto const token = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
                if (!token.empty())
                    candidates.insert(token);
                if (end == std::string::npos)
                    break;
                start = end + 1;
            }
        }
    auto out = std::vector<std::string> {};
    for (auto const& token: candidates)
    {
        bool ok = true;
        for (auto const& w: target)
            ok = ok && in_window(w, token);
        for (auto const& w: opposite)
            ok = ok && !in_window(w, token);
        if (ok)
            out.push_back(token);
    }
    return out;
}

} // namespace oracle
