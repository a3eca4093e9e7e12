// SPDX-License-Identifier: Apache-2.0
#include <logrules/backend.hpp>
#include <logrules/rule.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cctype>
#include <unordered_map>

namespace logrules
{

namespace
{

std::string fenced(std::string_view source)
{
    return fmt::format("```\n{}\n```\n", source);
}

bool window_contains(const LogWindow& window, std::string_view token)
{
    return std::any_of(window.lines.begin(), window.lines.end(),
                       [&](const std::string& line) { return line.find(token) != std::string::npos; });
}

std::size_t lines_containing(const LogWindow& window, std::string_view token)
{
    return static_cast<std::size_t>(std::count_if(window.lines.begin(), window.lines.end(), [&](const std::string& line) {
        return line.find(token) != std::string::npos;
    }));
}

std::size_t presence(const std::vector<LogWindow>& windows, std::string_view token)
{
    return static_cast<std::size_t>(
        std::count_if(windows.begin(), windows.end(), [&](const LogWindow& w) { return window_contains(w, token); }));
}

bool has_digit(std::string_view token)
{
    return std::any_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

std::string rule_name(Label kind, std::string_view token)
{
    auto name = std::string(to_string(kind)) + "_";
    for (char c: token.substr(0, 32))
        name.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return name;
}

std::string generate(const ContrastiveGroup& group)
{
    auto const kind = group.target_kind;
    auto const& target = group.same_label_windows;
    auto const& other = group.opposite_label_windows;

    // Candidate tokens in first-occurrence order, anchor window first; occurrence totals alongside.
    // Tokens carrying digits look like parameter values and are only used when nothing else exists.
    auto candidates = std::vector<std::string> {};
    auto occurrences = std::vector<std::size_t> {};
    auto collect = [&](bool allow_digits) {
        auto seen = std::unordered_map<std::string, std::size_t> {};
        for (auto const& window: target)
            for (auto const& line: window.lines)
                for (auto token: tokenize_views(line))
                {
                    if (!allow_digits && has_digit(token))
                        continue;
                    auto [it, inserted] = seen.try_emplace(std::string(token), candidates.size());
                    if (inserted)
                    {
                        candidates.emplace_back(token);
                        occurrences.push_back(0);
                    }
                    ++occurrences[it->second];
                }
    };
    collect(false);
    if (candidates.empty())
        collect(true);
    if (candidates.empty())
        return fenced(fmt::format("rule {}_empty {} \"Windows without content\" {{ count(matches(/./)) == 0 }}",
                                  to_string(kind), to_string(kind)));

    std::size_t best = 0;
    long best_score = std::numeric_limits<long>::min();
    for (std::size_t i = 0; i < candidates.size(); ++i)
    {
        auto const score = static_cast<long>(presence(target, candidates[i])) - static_cast<long>(presence(other, candidates[i]));
        // Ties go to the rarer token, which tends to be the distinctive one.
        if (score > best_score || (score == best_score && occurrences[i] < occurrences[best]))
        {
            best_score = score;
            best = i;
        }
    }
    if (presence(target, candidates[best]) == target.size() && presence(other, candidates[best]) == 0)
    {
        auto const& token = candidates[best];
        return fenced(fmt::format("rule {} {} {} {{ contains({}) }}", rule_name(kind, token), to_string(kind),
                                  quote_string(fmt::format("Windows mentioning {}", token)), quote_string(token)));
    }

    auto const frequent = static_cast<std::size_t>(
        std::max_element(occurrences.begin(), occurrences.end()) - occurrences.begin());
    auto const& token = candidates[frequent];
    auto counts = [&](const std::vector<LogWindow>& windows) {
        auto v = std::vector<std::size_t> {};
        for (auto const& w: windows)
            v.push_back(lines_containing(w, token));
        return v;
    };
    auto const t = counts(target);
    auto const o = counts(other);
    auto const min_t = *std::min_element(t.begin(), t.end());
    auto const max_t = *std::max_element(t.begin(), t.end());
    auto const min_o = o.empty() ? std::size_t { 0 } : *std::min_element(o.begin(), o.end());
    auto const max_o = o.empty() ? std::size_t { 0 } : *std::max_element(o.begin(), o.end());

    std::string condition;
    if (o.empty() || min_t > max_o)
        condition = fmt::format("> {}", (min_t + max_o) / 2);
    else if (max_t < min_o)
        condition = fmt::format("< {}", (max_t + min_o + 1) / 2);
    else
    {
        auto mean = [](const std::vector<std::size_t>& v) {
            double total = 0;
            for (auto x: v)
                total += static_cast<double>(x);
            return total / static_cast<double>(v.size());
        };
        auto const mid = static_cast<long>(std::floor((mean(t) + mean(o)) / 2.0));
        condition = fmt::format("{} {}", mean(t) > mean(o) ? ">" : "<", mid);
    }
    return fenced(fmt::format("rule {} {} {} {{ count(contains({})) {} }}", rule_name(kind, token), to_string(kind),
                              quote_string(fmt::format("Windows where {} recurs {} times", token, condition)),
                              quote_string(token), condition));
}

bool is_hex(char c)
{
    return std::isxdigit(static_cast<unsigned char>(c)) != 0;
}

std::string regex_escape(std::string_view text)
{
    auto out = std::string {};
    for (char c: text)
    {
        if (std::string_view(R"(\.^$|?*+()[]{})").find(c) != std::string_view::npos)
            out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

/// Regex source with each run of >= 8 hex digits generalized, or nullopt when there is none.
std::optional<std::string> generalize_hex(std::string_view needle)
{
    auto out = std::string {};
    bool changed = false;
    std::size_t i = 0;
    while (i < needle.size())
    {
        auto j = i;
        while (j < needle.size() && is_hex(needle[j]))
            ++j;
        if (j - i >= 8)
        {
            out += "[0-9a-fA-F]{8,}";
            changed = true;
            i = j;
        }
        else if (j > i)
        {
            out += regex_escape(needle.substr(i, j - i));
            i = j;
        }
        else
        {
            out += regex_escape(needle.substr(i, 1));
            ++i;
        }
    }
    if (!changed)
        return std::nullopt;
    return out;
}

Predicate refine_pred(const Predicate& pred)
{
    if (!pred.is_contains())
        return pred;
    if (auto source = generalize_hex(pred.needle()))
        return Predicate { Pattern(*source) };
    return pred;
}

ExprPtr refine_expr(const Expr& expr)
{
    return std::visit(
        [](const auto& node) -> ExprPtr {
            using T = std::decay_t<decltype(node)>;
            auto copy = node;
            if constexpr (std::is_same_v<T, ast::Seq>)
            {
                copy.first = refine_pred(node.first);
                copy.second = refine_pred(node.second);
            }
            else if constexpr (std::is_same_v<T, ast::Not>)
                copy.operand = refine_expr(*node.operand);
            else if constexpr (std::is_same_v<T, ast::And> || std::is_same_v<T, ast::Or>)
            {
                for (auto& op: copy.operands)
                    op = refine_expr(*op);
            }
            else if constexpr (!std::is_same_v<T, ast::Numvar>)
                copy.pred = refine_pred(node.pred);
            return make_expr(std::move(copy));
        },
        expr.node);
}

std::string refine(const std::string& current)
{
    auto parsed = parse_rule(current);
    auto* rule = std::get_if<Rule>(&parsed);
    if (rule == nullptr)
        return fenced(current);
    rule->ast = refine_expr(*rule->ast);
    return fenced(pretty_print(*rule));
}

} // namespace

std::string mock_complete(const PromptBundle& bundle)
{
    switch (bundle.role)
    {
        case PromptRole::GenerateNormal:
        case PromptRole::GenerateAbnormal: return generate(bundle.contrastive);
        case PromptRole::Repair: return fenced(balance_delimiters(bundle.attachments.faulty_source.value_or("")));
        case PromptRole::Refine: return refine(bundle.attachments.current_source.value_or(""));
    }
    return {};
}

} // namespace logrules
