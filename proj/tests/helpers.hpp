// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <logrules/corpus.hpp>
#include <logrules/rule.hpp>

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testing
{

inline logrules::LogWindow window(logrules::WindowId id, std::vector<std::string> lines,
                                  logrules::Label label = logrules::Label::Normal)
{
    return logrules::LogWindow { .id = id, .lines = std::move(lines), .label = label };
}

/// Parses or fails the current test case.
inline logrules::Rule rule(std::string_view source)
{
    auto parsed = logrules::parse_rule(source);
    if (auto* error = std::get_if<logrules::ParseError>(&parsed))
        FAIL("unexpected parse error: " << error->describe() << " in " << source);
    return std::get<logrules::Rule>(std::move(parsed));
}

/// Scratch directory removed on destruction.
class TempDir
{
  public:
    TempDir()
    {
        static std::atomic<int> counter { 0 };
        _path = std::filesystem::temp_directory_path() /
                ("logrules-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(_path);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return _path / name; }
    [[nodiscard]] const std::filesystem::path& path() const { return _path; }

  private:
    std::filesystem::path _path;
};

inline void write_file(const std::filesystem::path& path, std::string_view content)
{
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

} // namespace testing
