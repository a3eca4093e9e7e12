// SPDX-License-Identifier: Apache-2.0
#include <logrules/planted.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>

namespace logrules
{

namespace
{

using Rng = std::mt19937_64;

std::uint64_t pick(Rng& rng, std::uint64_t n)
{
    return rng() % n;
}

struct Line
{
    std::string text;
    Label label;
};

using WindowMaker = std::function<std::vector<Line>(Rng&, std::size_t)>;

struct Pattern
{
    std::string name;
    Label label;
    std::size_t count;
    WindowMaker make;
};

std::string heartbeat(Rng& rng)
{
    return fmt::format("INFO heartbeat node-{} ok seq={}", pick(rng, 512), 100000 + pick(rng, 900000000));
}

std::string cache_flush(Rng& rng)
{
    return fmt::format("DEBUG cache flush blk-{} done", pick(rng, 1u << 20));
}

std::string retry(Rng& rng)
{
    return fmt::format("WARN retry connect host-{} attempt={}", pick(rng, 4096), 1 + pick(rng, 9));
}

std::vector<Line> heartbeat_window(Rng& rng, std::size_t size)
{
    auto lines = std::vector<Line> {};
    for (std::size_t i = 0; i < size; ++i)
        lines.push_back({ heartbeat(rng), Label::Normal });
    return lines;
}

std::vector<Line> cache_window(Rng& rng, std::size_t size)
{
    auto lines = std::vector<Line> {};
    auto const warn_at = pick(rng, size);
    for (std::size_t i = 0; i < size; ++i)
        lines.push_back({ i == warn_at ? retry(rng) : cache_flush(rng), Label::Normal });
    return lines;
}

std::vector<Line> tlb_error_window(Rng& rng, std::size_t size)
{
    auto lines = heartbeat_window(rng, size);
    auto const at = pick(rng, size);
    lines[at] = { fmt::format("KERNDTLB data TLB error interrupt addr=0x{:08x}", pick(rng, 1ull << 32)),
                  Label::Abnormal };
    return lines;
}

std::vector<Line> retry_burst_window(Rng& rng, std::size_t size)
{
    // Roughly 60% retries, interleaved with flushes.
    auto const retries = std::max<std::size_t>(1, size * 3 / 5);
    auto lines = std::vector<Line> {};
    for (std::size_t i = 0; i < size; ++i)
        lines.push_back({ cache_flush(rng), Label::Normal });
    auto slots = std::vector<std::size_t>(size);
    for (std::size_t i = 0; i < size; ++i)
        slots[i] = i;
    std::shuffle(slots.begin(), slots.end(), rng);
    for (std::size_t i = 0; i < retries; ++i)
        lines[slots[i]] = { retry(rng), Label::Abnormal };
    return lines;
}

SyntheticCorpus assemble(std::vector<Pattern> patterns, const PlantedOptions& options)
{
    auto rng = Rng(options.seed);
    auto order = std::vector<std::size_t> {};
    for (std::size_t p = 0; p < patterns.size(); ++p)
        order.insert(order.end(), patterns[p].count, p);
    std::shuffle(order.begin(), order.end(), rng);

    auto corpus = SyntheticCorpus {};
    corpus.window_size = options.window_size;
    std::size_t index = 0;
    for (auto p: order)
    {
        auto const& pattern = patterns[p];
        auto window = pattern.make(rng, options.window_size);
        auto label = Label::Normal;
        for (auto& line: window)
        {
            if (line.label == Label::Abnormal)
                label = Label::Abnormal;
            corpus.lines.push_back(LogLine { .index = index++, .text = std::move(line.text), .label = line.label });
        }
        corpus.window_labels.push_back(label);
        corpus.window_patterns.push_back(pattern.name);
    }
    return corpus;
}

std::size_t share(std::size_t total, double fraction)
{
    return static_cast<std::size_t>(std::llround(static_cast<double>(total) * fraction));
}

void check(const PlantedOptions& options)
{
    if (options.window_size < 2 || options.windows == 0)
        throw std::invalid_argument("synthetic corpora need at least one window of two or more lines");
    if (!(options.abnormal_fraction >= 0.0 && options.abnormal_fraction < 1.0))
        throw std::invalid_argument("abnormal_fraction must be in [0, 1)");
}

} // namespace

SyntheticCorpus planted_corpus(const PlantedOptions& options)
{
    check(options);
    auto const abnormal = share(options.windows, options.abnormal_fraction);
    auto const normal = options.windows - abnormal;
    auto const tlb = share(abnormal, 0.85);
    auto const flush = share(normal, 0.15);
    return assemble(
        {
            { "heartbeat", Label::Normal, normal - flush, heartbeat_window },
            { "cache_flush", Label::Normal, flush, cache_window },
            { "tlb_error", Label::Abnormal, tlb, tlb_error_window },
            { "retry_burst", Label::Abnormal, abnormal - tlb, retry_burst_window },
        },
        options);
}

SyntheticCorpus dominant_pattern_corpus(const PlantedOptions& options, double minority_fraction)
{
    check(options);
    auto const abnormal = share(options.windows, options.abnormal_fraction);
    auto const normal = options.windows - abnormal;
    auto const minority = share(normal, minority_fraction);
    return assemble(
        {
            { "heartbeat", Label::Normal, normal - minority, heartbeat_window },
            { "cache_flush", Label::Normal, minority, cache_window },
            { "tlb_error", Label::Abnormal, abnormal, tlb_error_window },
        },
        options);
}

SyntheticCorpus geometric_corpus(const PlantedOptions& options, std::size_t patterns)
{
    check(options);
    static constexpr std::array<std::string_view, 8> kServices = {
        "ALPHA", "BRAVO", "CHARLIE", "DELTA", "ECHO", "FOXTROT", "GOLF", "HOTEL",
    };
    if (patterns == 0 || patterns > kServices.size())
        throw std::invalid_argument("geometric corpus supports 1 to 8 patterns");

    auto const abnormal = share(options.windows, options.abnormal_fraction);
    auto const normal = options.windows - abnormal;

    auto list = std::vector<Pattern> {};
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < patterns; ++j)
    {
        // Halving shares; the last pattern takes the remainder.
        auto const count = j + 1 == patterns ? normal - assigned : share(normal, std::ldexp(1.0, -static_cast<int>(j + 1)));
        assigned += count;
        auto const service = std::string(kServices[j]);
        list.push_back({ "svc_" + service, Label::Normal, count, [service](Rng& rng, std::size_t size) {
                            auto lines = std::vector<Line> {};
                            for (std::size_t i = 0; i < size; ++i)
                                lines.push_back({ fmt::format("SVC_{} request req-{} served in {}ms", service,
                                                              pick(rng, 1u << 24), 1 + pick(rng, 400)),
                                                  Label::Normal });
                            return lines;
                        } });
    }
    auto const first = std::string(kServices[0]);
    list.push_back({ "machine_check", Label::Abnormal, abnormal, [first](Rng& rng, std::size_t size) {
                        auto lines = std::vector<Line> {};
                        for (std::size_t i = 0; i < size; ++i)
                            lines.push_back({ fmt::format("SVC_{} request req-{} served in {}ms", first,
                                                          pick(rng, 1u << 24), 1 + pick(rng, 400)),
                                              Label::Normal });
                        lines[pick(rng, size)] = { "KERNMC machine check exception bank 4", Label::Abnormal };
                        return lines;
                    } });
    return assemble(std::move(list), options);
}

void write_bgl_dash(std::ostream& out, const std::vector<LogLine>& lines)
{
    for (auto const& line: lines)
    {
        if (line.label == Label::Normal)
            out << "- ";
        out << line.text << '\n';
    }
}

} // namespace logrules
