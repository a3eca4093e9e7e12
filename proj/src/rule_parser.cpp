// SPDX-License-Identifier: Apache-2.0
#include <logrules/rule.hpp>

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <optional>

namespace logrules
{

std::string_view to_string(ParseError::Kind kind) noexcept
{
    switch (kind)
    {
        case ParseError::Kind::Lexical: return "lexical error";
        case ParseError::Kind::Syntax: return "syntax error";
        case ParseError::Kind::UnsupportedRegex: return "unsupported regex feature";
        case ParseError::Kind::DepthOverflow: return "depth overflow";
    }
    return "syntax error";
}

std::string ParseError::describe() const
{
    return fmt::format("{}:{}: {}: {}", line, column, to_string(kind), message);
}

namespace
{

enum class Tok
{
    Ident,
    String,
    Regex,
    Number,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Cmp,
    End,
};

std::string_view describe(Tok tok)
{
    switch (tok)
    {
        case Tok::Ident: return "identifier";
        case Tok::String: return "string literal";
        case Tok::Regex: return "regex literal";
        case Tok::Number: return "number";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Comma: return "','";
        case Tok::Cmp: return "comparison operator";
        case Tok::End: return "end of input";
    }
    return "token";
}

struct Token
{
    Tok kind = Tok::End;
    std::size_t offset = 0;
    std::string text; // identifier, decoded string, raw regex, number text
    CmpOp cmp = CmpOp::Eq;
    bool integral = false;
};

/// Thrown internally and converted to ParseError at the API boundary.
struct Failure
{
    ParseError::Kind kind;
    std::size_t offset;
    std::string message;
};

class Lexer
{
  public:
    explicit Lexer(std::string_view source): _src(source) {}

    Token next()
    {
        skip_trivia();
        auto token = Token {};
        token.offset = _pos;
        if (_pos >= _src.size())
            return token;

        auto const c = _src[_pos];
        switch (c)
        {
            case '(': return single(token, Tok::LParen);
            case ')': return single(token, Tok::RParen);
            case '{': return single(token, Tok::LBrace);
            case '}': return single(token, Tok::RBrace);
            case ',': return single(token, Tok::Comma);
            case '"': return string(token);
            case '/': return regex(token);
            case '<':
            case '>':
            case '=':
            case '!': return comparison(token);
            default: break;
        }
        if (c == '-' || c == '.' || is_digit(c))
            return number(token);
        if (is_ident_start(c))
        {
            while (_pos < _src.size() && is_ident_char(_src[_pos]))
                ++_pos;
            token.kind = Tok::Ident;
            token.text = std::string(_src.substr(token.offset, _pos - token.offset));
            return token;
        }
        throw Failure { ParseError::Kind::Lexical, _pos, fmt::format("unexpected character '{}'", c) };
    }

  private:
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

    void skip_trivia()
    {
        while (_pos < _src.size())
        {
            auto const c = _src[_pos];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
            {
                ++_pos;
            }
            else if (c == '#')
            {
                while (_pos < _src.size() && _src[_pos] != '\n')
                    ++_pos;
            }
            else
            {
                break;
            }
        }
    }

    Token single(Token& token, Tok kind)
    {
        token.kind = kind;
        ++_pos;
        return token;
    }

    Token string(Token& token)
    {
        ++_pos;
        while (true)
        {
            if (_pos >= _src.size())
                throw Failure { ParseError::Kind::Lexical, token.offset, "unterminated string literal" };
            auto const c = _src[_pos++];
            if (c == '"')
                break;
            if (c != '\\')
            {
                token.text.push_back(c);
                continue;
            }
            if (_pos >= _src.size())
                throw Failure { ParseError::Kind::Lexical, token.offset, "unterminated string literal" };
            auto const e = _src[_pos++];
            switch (e)
            {
                case '"': token.text.push_back('"'); break;
                case '\\': token.text.push_back('\\'); break;
                case 'n': token.text.push_back('\n'); break;
                case 't': token.text.push_back('\t'); break;
                case 'r': token.text.push_back('\r'); break;
                default:
                    throw Failure { ParseError::Kind::Lexical, _pos - 2,
                                    fmt::format("unknown string escape '\\{}'", e) };
            }
        }
        token.kind = Tok::String;
        return token;
    }

    Token regex(Token& token)
    {
        ++_pos;
        while (true)
        {
            if (_pos >= _src.size() || _src[_pos] == '\n')
                throw Failure { ParseError::Kind::Lexical, token.offset, "unterminated regex literal" };
            auto const c = _src[_pos++];
            if (c == '/')
                break;
            if (c == '\\' && _pos < _src.size() && _src[_pos] != '\n')
            {
                token.text.push_back(c);
                token.text.push_back(_src[_pos++]);
                continue;
            }
            token.text.push_back(c);
        }
        token.kind = Tok::Regex;
        return token;
    }

    Token comparison(Token& token)
    {
        auto const c = _src[_pos];
        bool const eq_next = _pos + 1 < _src.size() && _src[_pos + 1] == '=';
        token.kind = Tok::Cmp;
        if (c == '<')
            token.cmp = eq_next ? CmpOp::Le : CmpOp::Lt;
        else if (c == '>')
            token.cmp = eq_next ? CmpOp::Ge : CmpOp::Gt;
        else if (c == '=' && eq_next)
            token.cmp = CmpOp::Eq;
        else if (c == '!' && eq_next)
            token.cmp = CmpOp::Ne;
        else
            throw Failure { ParseError::Kind::Lexical, _pos, fmt::format("unexpected character '{}'", c) };
        _pos += eq_next ? 2 : 1;
        return token;
    }

    Token number(Token& token)
    {
        auto const start = _pos;
        if (_src[_pos] == '-')
            ++_pos;
        auto const digits_start = _pos;
        while (_pos < _src.size() && is_digit(_src[_pos]))
            ++_pos;
        bool integral = _pos > digits_start;
        bool any_digits = integral;
        if (_pos < _src.size() && _src[_pos] == '.')
        {
            integral = false;
            ++_pos;
            while (_pos < _src.size() && is_digit(_src[_pos]))
            {
                ++_pos;
                any_digits = true;
            }
        }
        if (any_digits && _pos < _src.size() && (_src[_pos] == 'e' || _src[_pos] == 'E'))
        {
            integral = false;
            ++_pos;
            if (_pos < _src.size() && (_src[_pos] == '+' || _src[_pos] == '-'))
                ++_pos;
            auto const exp_start = _pos;
            while (_pos < _src.size() && is_digit(_src[_pos]))
                ++_pos;
            if (_pos == exp_start)
                throw Failure { ParseError::Kind::Lexical, start, "malformed number exponent" };
        }
        if (!any_digits)
            throw Failure { ParseError::Kind::Lexical, start, "malformed number" };
        token.kind = Tok::Number;
        token.integral = integral;
        token.text = std::string(_src.substr(start, _pos - start));
        return token;
    }

    std::string_view _src;
    std::size_t _pos = 0;
};

class RuleParser
{
  public:
    explicit RuleParser(std::string_view source): _lexer(source) { advance(); }

    [[nodiscard]] bool at_end() const { return _current.kind == Tok::End; }

    Rule parse_rule_decl()
    {
        expect_keyword("rule");
        auto rule = Rule {};
        rule.name = expect(Tok::Ident, "rule name").text;
        auto const kind = expect(Tok::Ident, "rule kind");
        if (kind.text == "normal")
            rule.kind = Label::Normal;
        else if (kind.text == "abnormal")
            rule.kind = Label::Abnormal;
        else
            fail(kind.offset, fmt::format("expected 'normal' or 'abnormal', found '{}'", kind.text));
        auto const doc = expect(Tok::String, "docstring");
        if (doc.text.empty())
            fail(doc.offset, "docstring must not be empty");
        rule.docstring = doc.text;
        expect(Tok::LBrace, "'{'");
        rule.ast = parse_expr();
        expect(Tok::RBrace, "'}'");
        if (expr_depth(*rule.ast) > kMaxExprDepth)
            throw Failure { ParseError::Kind::DepthOverflow, _rule_start,
                            fmt::format("expression nesting exceeds {}", kMaxExprDepth) };
        return rule;
    }

    void mark_rule_start() { _rule_start = _current.offset; }
    [[nodiscard]] std::size_t current_offset() const { return _current.offset; }

  private:
    void advance()
    {
        _previous_offset = _current.offset;
        _current = _lexer.next();
    }

    [[noreturn]] void fail(std::size_t offset, std::string message) const
    {
        throw Failure { ParseError::Kind::Syntax, offset, std::move(message) };
    }

    [[noreturn]] void unexpected(std::string_view expected) const
    {
        if (_current.kind == Tok::End)
            fail(_previous_offset, fmt::format("unexpected end of input, expected {}", expected));
        auto found = std::string(describe(_current.kind));
        if (_current.kind == Tok::Ident)
            found = fmt::format("'{}'", _current.text);
        fail(_current.offset, fmt::format("expected {}, found {}", expected, found));
    }

    Token expect(Tok kind, std::string_view what)
    {
        if (_current.kind != kind)
            unexpected(what);
        auto token = _current;
        advance();
        return token;
    }

    void expect_keyword(std::string_view keyword)
    {
        if (_current.kind != Tok::Ident || _current.text != keyword)
            unexpected(fmt::format("'{}'", keyword));
        advance();
    }

    [[nodiscard]] bool peek_keyword(std::string_view keyword) const
    {
        return _current.kind == Tok::Ident && _current.text == keyword;
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or()
    {
        auto first = parse_and();
        if (!peek_keyword("or"))
            return first;
        auto node = ast::Or {};
        node.operands.push_back(std::move(first));
        while (peek_keyword("or"))
        {
            advance();
            node.operands.push_back(parse_and());
        }
        return make_expr(std::move(node));
    }

    ExprPtr parse_and()
    {
        auto first = parse_unary();
        if (!peek_keyword("and"))
            return first;
        auto node = ast::And {};
        node.operands.push_back(std::move(first));
        while (peek_keyword("and"))
        {
            advance();
            node.operands.push_back(parse_unary());
        }
        return make_expr(std::move(node));
    }

    struct DepthGuard
    {
        RuleParser& parser;
        explicit DepthGuard(RuleParser& p, std::size_t offset): parser(p)
        {
            if (++parser._nesting > kMaxExprDepth)
                throw Failure { ParseError::Kind::DepthOverflow, offset,
                                fmt::format("expression nesting exceeds {}", kMaxExprDepth) };
        }
        ~DepthGuard() { --parser._nesting; }
        DepthGuard(const DepthGuard&) = delete;
        DepthGuard& operator=(const DepthGuard&) = delete;
    };

    ExprPtr parse_unary()
    {
        if (peek_keyword("not"))
        {
            auto const guard = DepthGuard(*this, _current.offset);
            advance();
            return make_expr(ast::Not { parse_unary() });
        }
        if (_current.kind == Tok::LParen)
        {
            auto const guard = DepthGuard(*this, _current.offset);
            advance();
            auto inner = parse_expr();
            expect(Tok::RParen, "')'");
            return inner;
        }
        return parse_atom();
    }

    Pattern make_pattern(const Token& token)
    {
        try
        {
            return Pattern(token.text);
        }
        catch (const RegexError& e)
        {
            auto const kind = e.kind() == RegexError::Kind::Unsupported ? ParseError::Kind::UnsupportedRegex
                                                                          : ParseError::Kind::Syntax;
            auto const prefix = e.kind() == RegexError::Kind::Unsupported ? "" : "invalid regex: ";
            throw Failure { kind, token.offset + 1 + e.offset(), prefix + std::string(e.what()) };
        }
    }

    Predicate parse_pred()
    {
        if (peek_keyword("contains"))
        {
            advance();
            expect(Tok::LParen, "'('");
            auto needle = expect(Tok::String, "string literal");
            expect(Tok::RParen, "')'");
            return Predicate { std::move(needle.text) };
        }
        if (peek_keyword("matches"))
        {
            advance();
            expect(Tok::LParen, "'('");
            auto const re = expect(Tok::Regex, "regex literal");
            expect(Tok::RParen, "')'");
            return Predicate { make_pattern(re) };
        }
        unexpected("'contains' or 'matches'");
    }

    CmpOp parse_cmp() { return expect(Tok::Cmp, "comparison operator").cmp; }

    double parse_double(const Token& token)
    {
        double value = 0.0;
        auto const* first = token.text.data();
        auto const* last = first + token.text.size();
        auto const [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc {} || ptr != last || !std::isfinite(value))
            fail(token.offset, fmt::format("numeric threshold '{}' is not a finite number", token.text));
        return value;
    }

    ExprPtr parse_atom()
    {
        if (_current.kind != Tok::Ident)
            unexpected("rule atom");
        auto const keyword = _current.text;
        if (keyword == "contains" || keyword == "matches")
            return make_expr(ast::Exists { parse_pred() });

        if (keyword == "count" || keyword == "ratio" || keyword == "all")
        {
            advance();
            expect(Tok::LParen, "'('");
            auto pred = parse_pred();
            expect(Tok::RParen, "')'");
            if (keyword == "all")
                return make_expr(ast::All { std::move(pred) });
            auto const op = parse_cmp();
            auto const number = expect(Tok::Number, "number");
            if (keyword == "ratio")
                return make_expr(ast::Ratio { std::move(pred), op, parse_double(number) });
            if (!number.integral)
                fail(number.offset, fmt::format("count threshold must be an integer, found '{}'", number.text));
            std::int64_t value = 0;
            auto const [ptr, ec] =
                std::from_chars(number.text.data(), number.text.data() + number.text.size(), value);
            if (ec != std::errc {} || ptr != number.text.data() + number.text.size())
                fail(number.offset, fmt::format("count threshold '{}' out of range", number.text));
            return make_expr(ast::Count { std::move(pred), op, value });
        }
        if (keyword == "seq")
        {
            advance();
            expect(Tok::LParen, "'('");
            auto first = parse_pred();
            expect(Tok::Comma, "','");
            auto second = parse_pred();
            expect(Tok::RParen, "')'");
            return make_expr(ast::Seq { std::move(first), std::move(second) });
        }
        if (keyword == "numvar")
        {
            advance();
            expect(Tok::LParen, "'('");
            auto pattern = make_pattern(expect(Tok::Regex, "regex literal"));
            expect(Tok::Comma, "','");
            auto const agg_token = expect(Tok::Ident, "aggregate (max, min, mean, sum, p95)");
            auto agg = Aggregate::Max;
            if (agg_token.text == "max")
                agg = Aggregate::Max;
            else if (agg_token.text == "min")
                agg = Aggregate::Min;
            else if (agg_token.text == "mean")
                agg = Aggregate::Mean;
            else if (agg_token.text == "sum")
                agg = Aggregate::Sum;
            else if (agg_token.text == "p95")
                agg = Aggregate::P95;
            else
                fail(agg_token.offset, fmt::format("unknown aggregate '{}'", agg_token.text));
            auto const op = parse_cmp();
            auto const threshold = parse_double(expect(Tok::Number, "number"));
            expect(Tok::RParen, "')'");
            return make_expr(ast::Numvar { std::move(pattern), agg, op, threshold });
        }
        unexpected("rule atom");
    }

    Lexer _lexer;
    Token _current;
    std::size_t _previous_offset = 0;
    std::size_t _rule_start = 0;
    std::size_t _nesting = 0;
};

ParseError to_parse_error(std::string_view source, const Failure& failure)
{
    auto error = ParseError {};
    error.kind = failure.kind;
    error.message = failure.message;
    auto const offset = source.empty() ? 0 : std::min(failure.offset, source.size() - 1);
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < offset; ++i)
    {
        if (source[i] == '\n')
        {
            ++error.line;
            line_start = i + 1;
        }
    }
    error.column = offset - line_start + 1;
    auto line_end = source.find('\n', line_start);
    if (line_end == std::string_view::npos)
        line_end = source.size();
    error.excerpt = std::string(source.substr(line_start, line_end - line_start));
    return error;
}

} // namespace

ParseManyResult parse_rules(std::string_view source)
{
    try
    {
        auto parser = RuleParser(source);
        auto rules = std::vector<Rule> {};
        while (!parser.at_end())
        {
            parser.mark_rule_start();
            rules.push_back(parser.parse_rule_decl());
        }
        if (rules.empty())
            throw Failure { ParseError::Kind::Syntax, 0, "expected at least one rule" };
        return rules;
    }
    catch (const Failure& failure)
    {
        return to_parse_error(source, failure);
    }
}

ParseResult parse_rule(std::string_view source)
{
    try
    {
        auto parser = RuleParser(source);
        parser.mark_rule_start();
        auto rule = parser.parse_rule_decl();
        if (!parser.at_end())
            throw Failure { ParseError::Kind::Syntax, parser.current_offset(), "expected exactly one rule" };
        return rule;
    }
    catch (const Failure& failure)
    {
        return to_parse_error(source, failure);
    }
}

} // namespace logrules
