// SPDX-License-Identifier: Apache-2.0
#include <logrules/backend.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <thread>

namespace logrules
{

namespace
{

struct Endpoint
{
    std::string scheme_host_port;
    std::string path;
};

Endpoint split_url(const std::string& url)
{
    auto const scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw BackendError(BackendError::Kind::Configuration, "endpoint must be an absolute URL: " + url);
    auto const path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return { url, "/" };
    return { url.substr(0, path_start), url.substr(path_start) };
}

bool retryable(int status)
{
    return status == 408 || status == 429 || status >= 500;
}

} // namespace

HttpBackend::HttpBackend(BackendConfig config): _config(std::move(config))
{
    (void) split_url(_config.endpoint);
}

TokenUsage HttpBackend::usage() const
{
    return { _input_tokens.load(), _output_tokens.load() };
}

std::string HttpBackend::complete(const PromptBundle& bundle)
{
    return complete_text(render_prompt(bundle));
}

std::string HttpBackend::complete_text(const std::string& prompt)
{
    auto const endpoint = split_url(_config.endpoint);

    auto request = nlohmann::json {
        { "model", _config.model },
        { "messages", nlohmann::json::array({ { { "role", "user" }, { "content", prompt } } }) },
    };
    if (_config.send_temperature)
        request["temperature"] = 0;
    auto const body = request.dump();

    auto headers = httplib::Headers {};
    if (!_config.api_key_env.empty())
    {
        if (char const* key = std::getenv(_config.api_key_env.c_str()); key != nullptr && *key != '\0')
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto const seconds = std::chrono::duration_cast<std::chrono::seconds>(_config.timeout);
    auto const micros = std::chrono::duration_cast<std::chrono::microseconds>(_config.timeout - seconds);

    std::string last_error;
    for (unsigned attempt = 0;; ++attempt)
    {
        if (attempt > 0)
        {
            auto const delay = _config.initial_backoff * (1LL << std::min(attempt - 1, 16U));
            spdlog::warn("retrying chat completion (attempt {} of {}) after {} ms: {}", attempt + 1,
                         _config.max_retries + 1, delay.count(), last_error);
            ++_retries;
            std::this_thread::sleep_for(delay);
        }

        auto client = httplib::Client(endpoint.scheme_host_port);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());

        auto const result = client.Post(endpoint.path, headers, body, "application/json");
        bool const last_attempt = attempt >= _config.max_retries;
        if (!result)
        {
            last_error = "transport failure: " + httplib::to_string(result.error());
            if (last_attempt)
                throw BackendError(BackendError::Kind::Transport, last_error);
            continue;
        }
        auto const status = result->status;
        if (status < 200 || status >= 300)
        {
            last_error = "HTTP status " + std::to_string(status);
            if (!retryable(status))
                throw BackendError(BackendError::Kind::HttpStatus, last_error, status);
            if (last_attempt)
                throw BackendError(BackendError::Kind::Transport, last_error + " after retries", status);
            continue;
        }

        try
        {
            auto const response = nlohmann::json::parse(result->body);
            auto const& content = response.at("choices").at(0).at("message").at("content");
            if (auto it = response.find("usage"); it != response.end() && it->is_object())
            {
                _input_tokens += it->value("prompt_tokens", std::uint64_t { 0 });
                _output_tokens += it->value("completion_tokens", std::uint64_t { 0 });
            }
            return content.get<std::string>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw BackendError(BackendError::Kind::MalformedResponse,
                               std::string("malformed chat completion response: ") + e.what(), status);
        }
    }
}

} // namespace logrules
