// SPDX-License-Identifier: Apache-2.0
#include <logrules/rule_database.hpp>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace logrules
{

using nlohmann::ordered_json;

const StoredRule* RuleDatabase::find(std::string_view name) const
{
    for (auto const* list: { &normal_rules, &abnormal_rules })
        for (auto const& stored: *list)
            if (stored.rule.name == name)
                return &stored;
    return nullptr;
}

void RuleDatabase::add(StoredRule stored)
{
    auto const base = stored.rule.name;
    for (int suffix = 2; find(stored.rule.name) != nullptr; ++suffix)
        stored.rule.name = fmt::format("{}_{}", base, suffix);
    rules(stored.rule.kind).push_back(std::move(stored));
}

namespace
{

ordered_json config_to_json(const SynthesisConfig& config)
{
    auto out = ordered_json::object();
    for_each_field(config, [&](const char* key, const auto& value) { out[key] = value; });
    return out;
}

SynthesisConfig config_from_json(const ordered_json& in)
{
    auto config = SynthesisConfig {};
    for_each_field(config, [&](const char* key, auto& value) {
        if (auto it = in.find(key); it != in.end())
            it->get_to(value);
    });
    return config;
}

ordered_json rule_to_json(const StoredRule& stored)
{
    auto const& rule = stored.rule;
    return ordered_json {
        { "name", rule.name },
        { "kind", to_string(rule.kind) },
        { "docstring", rule.docstring },
        { "dsl_source", pretty_print(rule) },
        { "provenance",
          { { "epoch", rule.provenance.epoch },
            { "rollout", rule.provenance.rollout },
            { "transcript_id", rule.provenance.transcript_id } } },
        { "acceptance", { { "validation_coverage", stored.validation_coverage } } },
    };
}

StoredRule rule_from_json(const ordered_json& in, Label expected_kind)
{
    auto const source = in.at("dsl_source").get<std::string>();
    auto parsed = parse_rule(source);
    if (auto* error = std::get_if<ParseError>(&parsed))
        throw DatabaseError("stored rule does not parse: " + error->describe());
    auto stored = StoredRule { .rule = std::get<Rule>(std::move(parsed)), .validation_coverage = 0.0 };
    if (stored.rule.kind != expected_kind)
        throw DatabaseError(fmt::format("rule {} is stored among {} rules but declares kind {}", stored.rule.name,
                                        to_string(expected_kind), to_string(stored.rule.kind)));
    if (auto it = in.find("provenance"); it != in.end() && it->is_object())
    {
        stored.rule.provenance.epoch = it->value("epoch", std::int64_t { -1 });
        stored.rule.provenance.rollout = it->value("rollout", std::int64_t { -1 });
        stored.rule.provenance.transcript_id = it->value("transcript_id", std::string {});
    }
    if (auto it = in.find("acceptance"); it != in.end() && it->is_object())
        stored.validation_coverage = it->value("validation_coverage", 0.0);
    return stored;
}

} // namespace

std::string to_json(const RuleDatabase& db)
{
    auto out = ordered_json {
        { "version", RuleDatabase::kVersion },
        { "config", config_to_json(db.config) },
        { "corpus_fingerprint", db.corpus_fingerprint },
        { "windowing", { { "window_size", db.window_size }, { "stride", db.stride } } },
        { "partial", db.partial },
    };
    if (!db.abort_reason.empty())
        out["abort_reason"] = db.abort_reason;
    for (auto kind: { Label::Normal, Label::Abnormal })
    {
        auto list = ordered_json::array();
        for (auto const& stored: db.rules(kind))
            list.push_back(rule_to_json(stored));
        out[kind == Label::Normal ? "normal_rules" : "abnormal_rules"] = std::move(list);
    }
    return out.dump(2) + "\n";
}

RuleDatabase database_from_json(std::string_view text)
{
    auto root = ordered_json {};
    try
    {
        root = ordered_json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw DatabaseError(fmt::format("malformed rule database at byte {}: {}", e.byte, e.what()));
    }
    try
    {
        if (!root.is_object())
            throw DatabaseError("rule database must be a JSON object");
        auto const version = root.at("version").get<int>();
        if (version != RuleDatabase::kVersion)
            throw DatabaseError(fmt::format("unsupported rule database version {}", version));
        auto db = RuleDatabase {};
        if (auto it = root.find("config"); it != root.end())
            db.config = config_from_json(*it);
        db.corpus_fingerprint = root.value("corpus_fingerprint", std::string {});
        if (auto it = root.find("windowing"); it != root.end())
        {
            db.window_size = it->at("window_size").get<std::size_t>();
            db.stride = it->at("stride").get<std::size_t>();
            if (db.window_size == 0 || db.stride == 0)
                throw DatabaseError("windowing sizes must be positive");
        }
        db.partial = root.value("partial", false);
        db.abort_reason = root.value("abort_reason", std::string {});
        for (auto const& item: root.at("normal_rules"))
            db.normal_rules.push_back(rule_from_json(item, Label::Normal));
        for (auto const& item: root.at("abnormal_rules"))
            db.abnormal_rules.push_back(rule_from_json(item, Label::Abnormal));
        return db;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw DatabaseError(fmt::format("invalid rule database: {}", e.what()));
    }
}

RuleDatabase load_database(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw DatabaseError("cannot open rule database " + path.string());
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return database_from_json(buffer.str());
}

void save_database(const RuleDatabase& db, const std::filesystem::path& path)
{
    auto const tmp = std::filesystem::path(path.string() + ".tmp");
    {
        auto out = std::ofstream(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DatabaseError("cannot write rule database " + tmp.string());
        out << to_json(db);
        if (!out.flush())
            throw DatabaseError("failed writing rule database " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string corpus_fingerprint(std::span<const LogWindow> windows)
{
    std::uint64_t hash = 14695981039346656037ULL;
    auto feed = [&](std::string_view bytes) {
        for (unsigned char c: bytes)
        {
            hash ^= c;
            hash *= 1099511628211ULL;
        }
    };
    for (auto const& window: windows)
    {
        feed(to_string(window.label));
        feed("\x1e");
        for (auto const& line: window.lines)
        {
            feed(line);
            feed("\n");
        }
        feed("\x1d");
    }
    return fmt::format("fnv1a64:{:016x}", hash);
}

} // namespace logrules
