// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/backend.hpp>

#include <deque>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

namespace testing
{

/// Replays canned completions in order and records every bundle it receives.
/// An exhausted script keeps returning the last entry.
class ScriptedBackend final: public logrules::LlmBackend
{
  public:
    struct Fail
    {
    };
    using Step = std::variant<std::string, Fail>;

    explicit ScriptedBackend(std::vector<Step> script): _script(script.begin(), script.end()) {}

    std::string complete(const logrules::PromptBundle& bundle) override
    {
        auto lock = std::lock_guard(_mutex);
        _seen.push_back(bundle);
        auto step = _script.empty() ? Step { Fail {} } : _script.front();
        if (_script.size() > 1)
            _script.pop_front();
        if (std::holds_alternative<Fail>(step))
            throw logrules::BackendError(logrules::BackendError::Kind::Transport, "scripted transport failure");
        return std::get<std::string>(step);
    }

    [[nodiscard]] std::vector<logrules::PromptBundle> seen() const
    {
        auto lock = std::lock_guard(_mutex);
        return _seen;
    }

  private:
    mutable std::mutex _mutex;
    std::deque<Step> _script;
    std::vector<logrules::PromptBundle> _seen;
};

inline std::string fenced(std::string_view source)
{
    return "```\n" + std::string(source) + "\n```\n";
}

} // namespace testing
