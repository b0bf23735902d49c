#pragma once

// File helpers shared by the line-delimited record formats.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace awi {

using Json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);
/// Writes content, creating parent directories. Throws Error on I/O failure.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Splits on '\n', dropping a trailing '\r' per line. The final empty line is not reported.
std::vector<std::string_view> split_lines(std::string_view text);

/// One compact JSON document per line, newline-terminated.
std::string to_jsonl(const std::vector<Json>& records);

/// Resolves `p` against `base` unless already absolute.
std::filesystem::path resolve_path(const std::filesystem::path& base, const std::filesystem::path& p);

}  // namespace awi
