#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace denguecast::io {

/// Splits one comma-delimited line. Fields may not contain commas or quotes.
std::vector<std::string_view> split_fields(std::string_view line);

/// Reads a text file as lines with trailing '\r' removed.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes `content` to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Shortest round-trip decimal representation of a double.
std::string format_number(double value);

double parse_number(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

}  // namespace denguecast::io
