// SPDX-License-Identifier: Apache-2.0
#include <logrules/corpus.hpp>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace logrules
{

std::string_view to_string(Label label) noexcept
{
    return label == Label::Normal ? "normal" : "abnormal";
}

Label opposite(Label label) noexcept
{
    return label == Label::Normal ? Label::Abnormal : Label::Normal;
}

Label parse_label(std::string_view text)
{
    if (text == "normal")
        return Label::Normal;
    if (text == "abnormal")
        return Label::Abnormal;
    throw std::invalid_argument("unknown label: " + std::string(text));
}

LabelFormat parse_label_format(std::string_view text)
{
    if (text == "bgl_dash")
        return LabelFormat::BglDash;
    if (text == "two_column")
        return LabelFormat::TwoColumn;
    throw std::invalid_argument("unknown label format: " + std::string(text));
}

std::string_view to_string(Split split) noexcept
{
    switch (split)
    {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "train";
}

std::string sanitize_utf8(std::string_view bytes)
{
    static constexpr std::string_view replacement = "\xEF\xBF\xBD";

    std::string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size())
    {
        auto const lead = static_cast<unsigned char>(bytes[i]);
        std::size_t length = 0;
        std::uint32_t min_code = 0;
        if (lead < 0x80)
        {
            out.push_back(static_cast<char>(lead));
            ++i;
            continue;
        }
        if ((lead & 0xE0) == 0xC0)
        {
            length = 2;
            min_code = 0x80;
        }
        else if ((lead & 0xF0) == 0xE0)
        {
            length = 3;
            min_code = 0x800;
        }
        else if ((lead & 0xF8) == 0xF0)
        {
            length = 4;
            min_code = 0x10000;
        }

        bool valid = length != 0 && i + length <= bytes.size();
        std::uint32_t code = valid ? (lead & (0x7F >> length)) : 0;
        for (std::size_t k = 1; valid && k < length; ++k)
        {
            auto const cont = static_cast<unsigned char>(bytes[i + k]);
            if ((cont & 0xC0) != 0x80)
                valid = false;
            else
                code = (code << 6) | (cont & 0x3F);
        }
        if (valid && (code < min_code || code > 0x10FFFF || (code >= 0xD800 && code <= 0xDFFF)))
            valid = false;

        if (valid)
        {
            out.append(bytes.substr(i, length));
            i += length;
        }
        else
        {
            out.append(replacement);
            ++i;
        }
    }
    return out;
}

namespace
{

void strip_line_end(std::string& line)
{
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
        line.pop_back();
}

std::vector<Label> read_label_file(const std::filesystem::path& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw CorpusError("cannot open label file: " + path.string());

    auto labels = std::vector<Label> {};
    auto token = std::string {};
    char ch = 0;
    auto flush = [&] {
        if (token.empty())
            return;
        if (token == "0")
            labels.push_back(Label::Normal);
        else if (token == "1")
            labels.push_back(Label::Abnormal);
        else
            throw CorpusError("invalid label '" + token + "' in " + path.string());
        token.clear();
    };
    while (in.get(ch))
    {
        if (ch == ',' || std::isspace(static_cast<unsigned char>(ch)))
            flush();
        else
            token.push_back(ch);
    }
    flush();
    return labels;
}

} // namespace

bool is_blank_line(std::string_view line)
{
    return line.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

LogLine parse_bgl_line(std::size_t index, std::string_view raw)
{
    auto line = LogLine { .index = index, .text = {}, .label = Label::Abnormal };
    if (raw == "-")
    {
        line.label = Label::Normal;
    }
    else if (raw.starts_with("- "))
    {
        line.label = Label::Normal;
        line.text = std::string(raw.substr(2));
    }
    else
    {
        line.text = std::string(raw);
    }
    return line;
}

std::vector<LogLine> read_bgl_dash(std::istream& in)
{
    auto lines = std::vector<LogLine> {};
    auto raw = std::string {};
    std::size_t index = 0;
    while (std::getline(in, raw))
    {
        strip_line_end(raw);
        if (!is_blank_line(raw))
            lines.push_back(parse_bgl_line(index, sanitize_utf8(raw)));
        ++index;
    }
    return lines;
}

std::filesystem::path sidecar_labels_path(const std::filesystem::path& corpus)
{
    auto appended = corpus;
    appended += ".labels";
    if (std::filesystem::exists(appended))
        return appended;
    auto replaced = corpus;
    replaced.replace_extension(".labels");
    if (std::filesystem::exists(replaced))
        return replaced;
    return appended;
}

std::vector<LogLine> load_corpus(const std::filesystem::path& path, LabelFormat format)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw CorpusError("cannot open corpus: " + path.string());

    if (format == LabelFormat::BglDash)
        return read_bgl_dash(in);

    auto const labels = read_label_file(sidecar_labels_path(path));
    auto raw_lines = std::vector<std::string> {};
    auto raw = std::string {};
    while (std::getline(in, raw))
    {
        strip_line_end(raw);
        raw_lines.push_back(std::move(raw));
    }
    if (labels.size() != raw_lines.size())
    {
        throw CorpusError("label/line count mismatch: " + std::to_string(raw_lines.size()) + " lines, "
                          + std::to_string(labels.size()) + " labels");
    }

    auto lines = std::vector<LogLine> {};
    lines.reserve(raw_lines.size());
    for (std::size_t i = 0; i < raw_lines.size(); ++i)
    {
        if (is_blank_line(raw_lines[i]))
            continue;
        lines.push_back(LogLine { .index = i, .text = sanitize_utf8(raw_lines[i]), .label = labels[i] });
    }
    return lines;
}

std::vector<LogWindow> make_windows(std::span<const LogLine> lines, std::size_t window_size, std::size_t stride)
{
    if (window_size == 0 || stride == 0)
        throw std::invalid_argument("window_size and stride must be positive");

    auto windows = std::vector<LogWindow> {};
    for (std::size_t start = 0; start < lines.size(); start += stride)
    {
        auto const end = std::min(lines.size(), start + window_size);
        auto window = LogWindow { .id = windows.size(), .lines = {}, .label = Label::Normal };
        window.lines.reserve(end - start);
        for (std::size_t i = start; i < end; ++i)
        {
            window.lines.push_back(lines[i].text);
            if (lines[i].label == Label::Abnormal)
                window.label = Label::Abnormal;
        }
        windows.push_back(std::move(window));
    }
    return windows;
}

std::vector<std::string_view> tokenize_views(std::string_view text)
{
    auto tokens = std::vector<std::string_view> {};
    std::size_t i = 0;
    auto const is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    while (i < text.size())
    {
        while (i < text.size() && is_space(text[i]))
            ++i;
        auto const start = i;
        while (i < text.size() && !is_space(text[i]))
            ++i;
        if (i > start)
            tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

std::vector<std::string> tokenize(std::string_view text)
{
    auto const views = tokenize_views(text);
    return { views.begin(), views.end() };
}

std::vector<const LogWindow*> Dataset::select(Split which) const
{
    auto out = std::vector<const LogWindow*> {};
    for (std::size_t i = 0; i < windows.size(); ++i)
        if (split[i] == which)
            out.push_back(&windows[i]);
    return out;
}

std::size_t Dataset::count(Split which) const
{
    return static_cast<std::size_t>(std::count(split.begin(), split.end(), which));
}

Dataset split_dataset(std::vector<LogWindow> windows, SplitRatio ratio)
{
    if (!(ratio.train > 0.0 && ratio.validation > 0.0 && ratio.test > 0.0))
        throw std::invalid_argument("split ratio components must be positive");

    auto dataset = Dataset { .windows = std::move(windows), .split = {} };
    auto const n = dataset.windows.size();
    dataset.split.assign(n, Split::Train);
    if (n < 3)
    {
        if (n > 0)
            spdlog::warn("only {} window(s); assigning all of them to the training split", n);
        return dataset;
    }

    auto const total = ratio.train + ratio.validation + ratio.test;
    // Exact ratios like 6/10 of 10 must not lose a window to floating error.
    auto const portion = [&](double part) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) * part / total + 1e-9));
    };
    auto const n_train = portion(ratio.train);
    auto const n_val = std::min(n - n_train, portion(ratio.validation));
    for (std::size_t i = n_train; i < n_train + n_val; ++i)
        dataset.split[i] = Split::Validation;
    for (std::size_t i = n_train + n_val; i < n; ++i)
        dataset.split[i] = Split::Test;
    return dataset;
}

void write_windows_jsonl(std::ostream& out, std::span<const LogWindow> windows)
{
    for (auto const& window: windows)
    {
        auto record = nlohmann::ordered_json {
            { "id", window.id },
            { "label", to_string(window.label) },
            { "lines", window.lines },
        };
        out << record.dump() << '\n';
    }
}

} // namespace logrules
