// SPDX-License-Identifier: Apache-2.0
#include <logrules/backend.hpp>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

namespace logrules
{

namespace detail
{
const std::map<std::string, std::string>& embedded_prompts();
}

std::string_view to_string(PromptRole role) noexcept
{
    switch (role)
    {
        case PromptRole::GenerateNormal: return "generate_normal";
        case PromptRole::GenerateAbnormal: return "generate_abnormal";
        case PromptRole::Repair: return "repair";
        case PromptRole::Refine: return "refine";
    }
    return "generate_normal";
}

void validate_bundle(const PromptBundle& bundle)
{
    auto const& a = bundle.attachments;
    switch (bundle.role)
    {
        case PromptRole::GenerateNormal:
        case PromptRole::GenerateAbnormal:
            if (!a.empty())
                throw std::invalid_argument("generate prompts carry no attachments");
            break;
        case PromptRole::Repair:
            if (!a.faulty_source || !a.error_messages || a.current_source)
                throw std::invalid_argument("repair prompts need the faulty source and error messages");
            break;
        case PromptRole::Refine:
            if (!a.current_source || a.faulty_source || a.error_messages || !a.misclassified_windows.empty())
                throw std::invalid_argument("refine prompts carry only the current source");
            break;
    }
    if (bundle.contrastive.same_label_windows.empty())
        throw std::invalid_argument("prompt has no target-side windows");
}

PromptLibrary PromptLibrary::embedded()
{
    auto library = PromptLibrary {};
    library._templates = detail::embedded_prompts();
    return library;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& directory)
{
    auto library = embedded();
    for (auto& [name, text]: library._templates)
    {
        auto const path = directory / (name + ".txt");
        if (!std::filesystem::exists(path))
            continue;
        auto in = std::ifstream(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot read prompt asset " + path.string());
        auto buffer = std::ostringstream {};
        buffer << in.rdbuf();
        text = buffer.str();
        spdlog::debug("prompt asset {} overridden from {}", name, path.string());
    }
    return library;
}

const std::string& PromptLibrary::get(const std::string& name) const
{
    auto it = _templates.find(name);
    if (it == _templates.end())
        throw std::out_of_range("unknown prompt asset: " + name);
    return it->second;
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& vars)
{
    auto out = std::string {};
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size())
    {
        auto const open = text.find("{{", pos);
        if (open == std::string_view::npos)
            break;
        auto const close = text.find("}}", open + 2);
        if (close == std::string_view::npos)
            break;
        out.append(text.substr(pos, open - pos));
        auto const key = std::string(text.substr(open + 2, close - open - 2));
        if (auto it = vars.find(key); it != vars.end())
            out.append(it->second);
        else
            out.append(text.substr(open, close + 2 - open));
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

namespace
{

std::map<std::string, std::string> template_vars(const ContrastiveGroup& group, const PromptLibrary& prompts)
{
    return {
        { "grammar", prompts.get("grammar") },
        { "kind", std::string(to_string(group.target_kind)) },
        { "opposite", std::string(to_string(opposite(group.target_kind))) },
    };
}

void append_window(std::string& out, const LogWindow& window, std::string_view role)
{
    out += fmt::format("<window id=\"{}\" label=\"{}\"{}>\n", window.id, to_string(window.label), role);
    for (auto const& line: window.lines)
    {
        out += line;
        out.push_back('\n');
    }
    out += "</window>\n";
}

} // namespace

PromptBundle make_generate_bundle(const ContrastiveGroup& group, const PromptLibrary& prompts)
{
    auto const role = group.target_kind == Label::Normal ? PromptRole::GenerateNormal : PromptRole::GenerateAbnormal;
    auto bundle = PromptBundle { .role = role,
                                 .instructions = render_template(prompts.get(std::string(to_string(role))),
                                                                 template_vars(group, prompts)),
                                 .contrastive = group,
                                 .attachments = {} };
    return bundle;
}

PromptBundle make_repair_bundle(const ContrastiveGroup& group, std::string faulty_source, std::string error_messages,
                                std::vector<LogWindow> misclassified, const PromptLibrary& prompts)
{
    auto bundle = PromptBundle {};
    bundle.role = PromptRole::Repair;
    bundle.instructions = render_template(prompts.get("repair"), template_vars(group, prompts));
    bundle.contrastive = group;
    bundle.attachments.faulty_source = std::move(faulty_source);
    bundle.attachments.error_messages = std::move(error_messages);
    bundle.attachments.misclassified_windows = std::move(misclassified);
    return bundle;
}

PromptBundle make_refine_bundle(const ContrastiveGroup& group, std::string current_source,
                                std::string overfitting_note, const PromptLibrary& prompts)
{
    auto vars = template_vars(group, prompts);
    vars["coverage"] = std::move(overfitting_note);
    auto bundle = PromptBundle {};
    bundle.role = PromptRole::Refine;
    bundle.instructions = render_template(prompts.get("refine"), vars);
    bundle.contrastive = group;
    bundle.attachments.current_source = std::move(current_source);
    return bundle;
}

std::string render_prompt(const PromptBundle& bundle)
{
    validate_bundle(bundle);
    auto const& group = bundle.contrastive;
    auto out = bundle.instructions;
    if (!out.empty() && out.back() != '\n')
        out.push_back('\n');

    out += fmt::format("\n## {} windows (the rule must return true)\n", to_string(group.target_kind));
    for (std::size_t i = 0; i < group.same_label_windows.size(); ++i)
        append_window(out, group.same_label_windows[i], i == 0 ? " role=\"anchor\"" : "");

    out += fmt::format("\n## {} windows (the rule must return false)\n", to_string(opposite(group.target_kind)));
    for (auto const& window: group.opposite_label_windows)
        append_window(out, window, "");

    auto const& a = bundle.attachments;
    if (a.current_source)
        out += fmt::format("\n## Current rule\n```\n{}\n```\n", *a.current_source);
    if (a.faulty_source)
        out += fmt::format("\n## Faulty rule\n```\n{}\n```\n", *a.faulty_source);
    if (a.error_messages)
        out += fmt::format("\n## Errors\n{}\n", *a.error_messages);
    if (!a.misclassified_windows.empty())
    {
        out += "\n## Misclassified windows\n";
        for (auto const& window: a.misclassified_windows)
            append_window(out, window, "");
    }
    return out;
}

Extraction extract_rule(std::string_view raw)
{
    auto result = Extraction {};
    auto const open = raw.find("```");
    if (open == std::string_view::npos)
    {
        result.error = "response contains no fenced code block";
        return result;
    }
    // Skip the info string (e.g. ```text) up to the end of the opening line.
    auto body_start = open + 3;
    auto const eol = raw.find('\n', body_start);
    auto const close_probe = raw.find("```", body_start);
    if (eol != std::string_view::npos && (close_probe == std::string_view::npos || eol < close_probe))
        body_start = eol + 1;
    auto const close = raw.find("```", body_start);
    if (close == std::string_view::npos)
    {
        result.error = "fenced code block is not terminated";
        return result;
    }
    auto body = raw.substr(body_start, close - body_start);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r' || body.back() == ' '))
        body.remove_suffix(1);
    while (!body.empty() && (body.front() == '\n' || body.front() == '\r' || body.front() == ' '))
        body.remove_prefix(1);
    result.source = std::string(body);
    if (raw.find("```", close + 3) != std::string_view::npos)
    {
        result.multiple_blocks = true;
        spdlog::warn("response contains several fenced blocks; using the first");
    }
    return result;
}

std::string fnv1a_hex(std::string_view data)
{
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c: data)
    {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return fmt::format("{:016x}", hash);
}

} // namespace logrules
