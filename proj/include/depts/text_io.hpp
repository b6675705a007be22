#pragma once

// Small text helpers shared by the CSV and document readers.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace depts {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_fields(std::string_view s, char sep);

/// Throw DataError mentioning `where` on malformed input.
std::int64_t parse_int(std::string_view s, const std::string& where);
double parse_double(std::string_view s, const std::string& where);

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace depts
