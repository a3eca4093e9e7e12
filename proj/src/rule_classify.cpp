// SPDX-License-Identifier: Apache-2.0
#include <logrules/rule.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace logrules
{

namespace
{

constexpr std::array<std::string_view, 9> kSeverityWords = {
    "error", "warn", "fatal", "critical", "severe", "fail", "exception", "panic", "alert",
};

bool mentions_severity(const Predicate& pred)
{
    auto text = std::string(pred.is_contains() ? pred.needle() : pred.pattern().source());
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::any_of(kSeverityWords.begin(), kSeverityWords.end(),
                       [&](std::string_view word) { return text.find(word) != std::string::npos; });
}

void collect(const Expr& expr, std::set<SubruleType>& out)
{
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, ast::Exists>)
                out.insert(SubruleType::Keyword);
            else if constexpr (std::is_same_v<T, ast::Count>)
                out.insert(mentions_severity(node.pred) ? SubruleType::Threshold : SubruleType::EventCount);
            else if constexpr (std::is_same_v<T, ast::Ratio>)
                out.insert(SubruleType::Threshold);
            else if constexpr (std::is_same_v<T, ast::All>)
                out.insert(SubruleType::NewPattern);
            else if constexpr (std::is_same_v<T, ast::Seq>)
                out.insert(SubruleType::Sequence);
            else if constexpr (std::is_same_v<T, ast::Numvar>)
                out.insert(SubruleType::Variables);
            else if constexpr (std::is_same_v<T, ast::Not>)
                collect(*node.operand, out);
            else
                for (auto const& op: node.operands)
                    collect(*op, out);
        },
        expr.node);
}

} // namespace

std::vector<SubruleType> classify_subrules(const Rule& rule)
{
    auto types = std::set<SubruleType> {};
    collect(*rule.ast, types);
    if (atom_count(*rule.ast) >= 2)
        types.insert(SubruleType::Composition);
    if (types.empty())
        types.insert(SubruleType::Other);
    return { types.begin(), types.end() };
}

} // namespace logrules
