// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/corpus.hpp>
#include <logrules/rule.hpp>
#include <logrules/synth.hpp>

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace logrules
{

struct StoredRule
{
    Rule rule;
    double validation_coverage = 0.0;
};

/// Normal rules followed by abnormal rules, each in acceptance order.
struct RuleDatabase
{
    static constexpr int kVersion = 1;

    SynthesisConfig config;
    std::string corpus_fingerprint;
    /// Windowing used during synthesis; detection reuses it by default.
    std::size_t window_size = 20;
    std::size_t stride = 20;
    std::vector<StoredRule> normal_rules;
    std::vector<StoredRule> abnormal_rules;
    /// Set when synthesis stopped early (interrupted or backend failure).
    bool partial = false;
    std::string abort_reason;

    [[nodiscard]] const std::vector<StoredRule>& rules(Label kind) const
    {
        return kind == Label::Normal ? normal_rules : abnormal_rules;
    }
    [[nodiscard]] std::vector<StoredRule>& rules(Label kind) { return kind == Label::Normal ? normal_rules : abnormal_rules; }

    [[nodiscard]] const StoredRule* find(std::string_view name) const;

    /// Appends to the list of the rule's kind, renaming on a name clash.
    void add(StoredRule stored);
};

class DatabaseError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Stable JSON rendering (two-space indent, fixed key order, trailing newline).
[[nodiscard]] std::string to_json(const RuleDatabase& db);

/// Throws DatabaseError, including the byte position for malformed JSON.
[[nodiscard]] RuleDatabase database_from_json(std::string_view text);

[[nodiscard]] RuleDatabase load_database(const std::filesystem::path& path);

/// Writes via a temporary file and rename so readers never observe a torn file.
void save_database(const RuleDatabase& db, const std::filesystem::path& path);

/// FNV-1a over the labels and line contents of every window.
[[nodiscard]] std::string corpus_fingerprint(std::span<const LogWindow> windows);

} // namespace logrules
