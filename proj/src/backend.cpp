// SPDX-License-Identifier: Apache-2.0
#include <logrules/backend.hpp>

namespace logrules
{

BackendError::BackendError(Kind kind, const std::string& message, int status):
    std::runtime_error(message), _kind(kind), _status(status)
{
}

std::string balance_delimiters(std::string_view source)
{
    enum class Mode
    {
        Code,
        String,
        Regex,
        Comment,
    };
    auto mode = Mode::Code;
    auto open = std::string {};
    for (std::size_t i = 0; i < source.size(); ++i)
    {
        char const c = source[i];
        switch (mode)
        {
            case Mode::String:
            case Mode::Regex:
                if (c == '\\')
                    ++i;
                else if ((mode == Mode::String && c == '"') || (mode == Mode::Regex && c == '/'))
                    mode = Mode::Code;
                break;
            case Mode::Comment:
                if (c == '\n')
                    mode = Mode::Code;
                break;
            case Mode::Code:
                if (c == '"')
                    mode = Mode::String;
                else if (c == '/')
                    mode = Mode::Regex;
                else if (c == '#')
                    mode = Mode::Comment;
                else if (c == '(' || c == '{')
                    open.push_back(c);
                else if ((c == ')' && !open.empty() && open.back() == '(')
                         || (c == '}' && !open.empty() && open.back() == '{'))
                    open.pop_back();
                break;
        }
    }

    auto out = std::string(source);
    if (mode == Mode::String)
        out.push_back('"');
    else if (mode == Mode::Regex)
        out.push_back('/');
    else if (mode == Mode::Comment)
        out.push_back('\n');
    for (auto it = open.rbegin(); it != open.rend(); ++it)
        out.push_back(*it == '(' ? ')' : '}');
    return out;
}

} // namespace logrules
