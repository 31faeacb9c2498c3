// Internal helpers shared by the modules that persist JSON / JSONL files.
#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "telephone/chain.hpp"

namespace telephone::detail {

using Json = nlohmann::ordered_json;

struct TextLine {
  std::size_t line_number;  // 1-based
  std::string text;
  bool terminated;  // ended with '\n'
};

/// Reads every line of a file; throws FormatError if it cannot be opened.
std::vector<TextLine> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary then renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Dumps without escaping non-ASCII; throws FormatError on invalid UTF-8.
std::string dump(const Json& j, int indent = -1);

Json parse_json(std::string_view text, const std::string& where);

// Typed field access with FormatError messages that name the field.
std::string get_string(const Json& j, const char* key);
std::string get_string_or(const Json& j, const char* key, std::string fallback);
double get_number(const Json& j, const char* key);
std::size_t get_size(const Json& j, const char* key);

Json chain_to_json(const TranslationChain& chain);
TranslationChain chain_from_json(const Json& j);
Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

}  // namespace telephone::detail
