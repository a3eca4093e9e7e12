// SPDX-License-Identifier: Apache-2.0
#include <logrules/rule.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace logrules
{

WindowText::WindowText(std::span<const std::string> lines)
{
    assign(lines);
}

void WindowText::assign(std::span<const std::string> lines)
{
    _joined.clear();
    _starts.clear();
    for (auto const& line: lines)
    {
        if (!_starts.empty())
            _joined.push_back('\n');
        _starts.push_back(_joined.size());
        _joined.append(line);
    }
}

std::string_view WindowText::line(std::size_t i) const noexcept
{
    auto const begin = _starts[i];
    auto const end = i + 1 < _starts.size() ? _starts[i + 1] - 1 : _joined.size();
    return std::string_view(_joined).substr(begin, end - begin);
}

std::size_t WindowText::line_of(std::size_t offset) const noexcept
{
    auto it = std::upper_bound(_starts.begin(), _starts.end(), offset);
    return static_cast<std::size_t>(it - _starts.begin()) - 1;
}

namespace
{

struct BudgetExceeded
{
};

class Evaluation
{
  public:
    Evaluation(const WindowText& window, EvalBudget budget, const AtomObserver* observer):
        _window(window), _budget(budget), _observer(observer)
    {
    }

    bool eval(const Expr& expr)
    {
        return std::visit([&](const auto& node) { return eval_node(node); }, expr.node);
    }

    [[nodiscard]] std::uint64_t steps() const noexcept { return _steps; }

  private:
    void charge(std::size_t bytes)
    {
        _steps += bytes + 1;
        if (_budget.max_steps != 0 && _steps > _budget.max_steps)
            throw BudgetExceeded {};
    }

    void visit_atom()
    {
        if (_observer != nullptr)
            (*_observer)(_next_atom++);
    }

    void skip(std::span<const ExprPtr> rest)
    {
        if (_observer == nullptr)
            return;
        for (auto const& op: rest)
            _next_atom += atom_count(*op);
    }

    [[nodiscard]] bool line_matches(const Predicate& pred, std::size_t i)
    {
        auto const text = _window.line(i);
        charge(text.size());
        return pred.matches_line(text);
    }

    [[nodiscard]] static bool joinable(const Predicate& pred)
    {
        return pred.is_contains() && !pred.needle().empty() && pred.needle().find('\n') == std::string::npos;
    }

    [[nodiscard]] bool any_line(const Predicate& pred)
    {
        if (joinable(pred))
        {
            auto const joined = _window.joined();
            charge(joined.size());
            return joined.find(pred.needle()) != std::string_view::npos;
        }
        for (std::size_t i = 0; i < _window.line_count(); ++i)
            if (line_matches(pred, i))
                return true;
        return false;
    }

    [[nodiscard]] std::size_t count_lines(const Predicate& pred)
    {
        std::size_t count = 0;
        if (joinable(pred))
        {
            auto const joined = _window.joined();
            charge(joined.size());
            std::size_t pos = 0;
            while (pos < joined.size())
            {
                auto const hit = joined.find(pred.needle(), pos);
                if (hit == std::string_view::npos)
                    break;
                ++count;
                auto const next_line = joined.find('\n', hit + pred.needle().size());
                if (next_line == std::string_view::npos)
                    break;
                pos = next_line + 1;
            }
            return count;
        }
        for (std::size_t i = 0; i < _window.line_count(); ++i)
            if (line_matches(pred, i))
                ++count;
        return count;
    }

    bool eval_node(const ast::Exists& node)
    {
        visit_atom();
        return any_line(node.pred);
    }

    bool eval_node(const ast::Count& node)
    {
        visit_atom();
        return compare(static_cast<std::int64_t>(count_lines(node.pred)), node.op, node.threshold);
    }

    bool eval_node(const ast::Ratio& node)
    {
        visit_atom();
        auto const lines = _window.line_count();
        auto const ratio =
            lines == 0 ? 0.0 : static_cast<double>(count_lines(node.pred)) / static_cast<double>(lines);
        return compare(ratio, node.op, node.threshold);
    }

    bool eval_node(const ast::All& node)
    {
        visit_atom();
        for (std::size_t i = 0; i < _window.line_count(); ++i)
            if (!line_matches(node.pred, i))
                return false;
        return true;
    }

    bool eval_node(const ast::Seq& node)
    {
        visit_atom();
        auto const lines = _window.line_count();
        std::size_t i = 0;
        while (i < lines && !line_matches(node.first, i))
            ++i;
        for (std::size_t j = i + 1; j < lines; ++j)
            if (line_matches(node.second, j))
                return true;
        return false;
    }

    bool eval_node(const ast::Numvar& node)
    {
        visit_atom();
        charge(_window.joined().size());
        auto values = collect_numeric(node.pattern, _window);
        if (values.empty())
            return false;
        return compare(aggregate(node.agg, std::move(values)), node.op, node.threshold);
    }

    bool eval_node(const ast::Not& node) { return !eval(*node.operand); }

    bool eval_node(const ast::And& node)
    {
        for (std::size_t i = 0; i < node.operands.size(); ++i)
        {
            if (!eval(*node.operands[i]))
            {
                skip(std::span(node.operands).subspan(i + 1));
                return false;
            }
        }
        return true;
    }

    bool eval_node(const ast::Or& node)
    {
        for (std::size_t i = 0; i < node.operands.size(); ++i)
        {
            if (eval(*node.operands[i]))
            {
                skip(std::span(node.operands).subspan(i + 1));
                return true;
            }
        }
        return false;
    }

    const WindowText& _window;
    EvalBudget _budget;
    const AtomObserver* _observer;
    std::uint64_t _steps = 0;
    std::size_t _next_atom = 0;
};

std::optional<double> parse_number(std::string_view text)
{
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    if (text.empty())
        return std::nullopt;
    double value = 0.0;
    auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc {} || ptr != text.data() + text.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

} // namespace

std::vector<double> collect_numeric(const Pattern& pattern, const WindowText& window)
{
    auto values = std::vector<double> {};
    auto const& regex = pattern.regex();
    for (std::size_t i = 0; i < window.line_count(); ++i)
    {
        auto const match = regex.find(window.line(i));
        if (!match)
            continue;
        auto const& groups = match->groups;
        auto const first_group = groups.size() > 1 ? std::size_t { 1 } : std::size_t { 0 };
        for (std::size_t g = first_group; g < groups.size(); ++g)
        {
            if (!groups[g])
                continue;
            if (auto value = parse_number(*groups[g]))
            {
                values.push_back(*value);
                break;
            }
        }
    }
    return values;
}

double aggregate(Aggregate agg, std::vector<double> values)
{
    if (values.empty())
        return 0.0;
    switch (agg)
    {
        case Aggregate::Max: return *std::max_element(values.begin(), values.end());
        case Aggregate::Min: return *std::min_element(values.begin(), values.end());
        case Aggregate::Sum:
        case Aggregate::Mean:
        {
            double total = 0.0;
            for (auto v: values)
                total += v;
            return agg == Aggregate::Sum ? total : total / static_cast<double>(values.size());
        }
        case Aggregate::P95:
        {
            std::sort(values.begin(), values.end());
            auto const n = values.size();
            auto const rank = (95 * n + 99) / 100; // ceil(0.95 n), 1-based
            return values[std::max<std::size_t>(rank, 1) - 1];
        }
    }
    return 0.0;
}

EvalOutcome evaluate_bounded(const Expr& expr, const WindowText& window, EvalBudget budget,
                             const AtomObserver* observer)
{
    auto evaluation = Evaluation(window, budget, observer);
    try
    {
        auto const verdict = evaluation.eval(expr);
        return EvalOutcome { .verdict = verdict, .timed_out = false, .steps = evaluation.steps() };
    }
    catch (const BudgetExceeded&)
    {
        return EvalOutcome { .verdict = false, .timed_out = true, .steps = evaluation.steps() };
    }
}

bool evaluate(const Expr& expr, const WindowText& window)
{
    auto evaluation = Evaluation(window, EvalBudget {}, nullptr);
    return evaluation.eval(expr);
}

bool evaluate(const Rule& rule, std::span<const std::string> window)
{
    return evaluate(*rule.ast, WindowText(window));
}

} // namespace logrules
