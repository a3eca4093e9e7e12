// SPDX-License-Identifier: Apache-2.0
#include <logrules/detector.hpp>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <deque>
#include <istream>

namespace logrules
{

std::string_view to_string(Stage stage) noexcept
{
    switch (stage)
    {
        case Stage::NormalDb: return "normal_db";
        case Stage::AbnormalDb: return "abnormal_db";
        case Stage::Default: return "default";
    }
    return "default";
}

namespace
{

DetectionResult cascade(const RuleDatabase& db, WindowId id, const WindowText& text, const ConsultObserver* observer)
{
    for (auto const& [stage, kind]: { std::pair { Stage::NormalDb, Label::Normal },
                                      std::pair { Stage::AbnormalDb, Label::Abnormal } })
    {
        auto const& rules = db.rules(kind);
        for (std::size_t i = 0; i < rules.size(); ++i)
        {
            if (observer != nullptr)
                (*observer)(stage, i);
            if (evaluate(*rules[i].rule.ast, text))
                return { .window_id = id, .verdict = kind, .matched_rule = rules[i].rule.name, .stage = stage };
        }
    }
    return { .window_id = id, .verdict = Label::Normal, .matched_rule = std::nullopt, .stage = Stage::Default };
}

} // namespace

Detector::Detector(RuleDatabase db): _db(std::move(db)) {}

DetectionResult Detector::classify(WindowId id, const WindowText& text, const ConsultObserver* observer) const
{
    return cascade(_db, id, text, observer);
}

DetectionResult Detector::classify(const LogWindow& window, const ConsultObserver* observer) const
{
    return cascade(_db, window.id, WindowText(window.lines), observer);
}

DetectionResult classify_window(const RuleDatabase& db, const LogWindow& window, const ConsultObserver* observer)
{
    return cascade(db, window.id, WindowText(window.lines), observer);
}

StreamError::StreamError(const std::string& message, std::uint64_t byte_offset):
    std::runtime_error(fmt::format("{} at byte {}", message, byte_offset)), _offset(byte_offset)
{
}

std::size_t detect_stream(const Detector& detector, std::istream& in, std::size_t window_size, std::size_t stride,
                          const std::function<void(const DetectionResult&)>& sink, LineFormat format)
{
    if (window_size == 0 || stride == 0)
        throw std::invalid_argument("window_size and stride must be positive");

    auto buffer = std::deque<std::string> {};
    auto window_lines = std::vector<std::string>(window_size);
    auto text = WindowText {};
    std::size_t next_start = 0;  // index (among kept lines) of the next window's first line
    std::size_t kept = 0;
    std::size_t emitted = 0;
    std::uint64_t offset = 0;

    auto emit = [&](std::size_t count) {
        window_lines.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            window_lines[i] = buffer[i];
        text.assign(window_lines);
        sink(detector.classify(emitted, text));
        ++emitted;
        next_start += stride;
        for (std::size_t i = 0; i < stride && !buffer.empty(); ++i)
            buffer.pop_front();
    };

    auto raw = std::string {};
    std::size_t index = 0;
    while (std::getline(in, raw))
    {
        offset += raw.size() + 1;
        while (!raw.empty() && (raw.back() == '\r' || raw.back() == '\n'))
            raw.pop_back();
        if (is_blank_line(raw))
        {
            ++index;
            continue;
        }
        auto clean = sanitize_utf8(raw);
        if (format == LineFormat::BglDash)
            clean = parse_bgl_line(index, clean).text;
        ++index;

        if (kept >= next_start)
            buffer.push_back(std::move(clean));
        ++kept;
        if (kept >= next_start + window_size)
            emit(window_size);
    }
    if (in.bad())
        throw StreamError("read error", offset);

    while (next_start < kept)
        emit(std::min(buffer.size(), kept - next_start));
    return emitted;
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn)
{
    auto m = Metrics { .tp = tp, .fp = fp, .fn = fn, .tn = tn };
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

Metrics compute_metrics(std::span<const DetectionResult> results, std::span<const GroundTruth> truth)
{
    if (results.size() != truth.size())
        throw std::invalid_argument(
            fmt::format("{} results but {} ground-truth labels", results.size(), truth.size()));
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < results.size(); ++i)
    {
        if (results[i].window_id != truth[i].window_id)
            throw std::invalid_argument(fmt::format("window id mismatch at position {}: {} vs {}", i,
                                                    results[i].window_id, truth[i].window_id));
        bool const predicted = results[i].verdict == Label::Abnormal;
        bool const actual = truth[i].label == Label::Abnormal;
        if (predicted && actual)
            ++tp;
        else if (predicted)
            ++fp;
        else if (actual)
            ++fn;
        else
            ++tn;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

std::string to_json_line(const DetectionResult& result)
{
    auto record = nlohmann::ordered_json {
        { "window_id", result.window_id },
        { "verdict", to_string(result.verdict) },
        { "matched_rule", nullptr },
        { "stage", to_string(result.stage) },
    };
    if (result.matched_rule)
        record["matched_rule"] = *result.matched_rule;
    return record.dump();
}

std::string to_json(const Metrics& m)
{
    auto record = nlohmann::ordered_json {
        { "tp", m.tp }, { "fp", m.fp }, { "fn", m.fn }, { "tn", m.tn },
        { "precision", m.precision }, { "recall", m.recall }, { "f1", m.f1 },
    };
    return record.dump();
}

} // namespace logrules
