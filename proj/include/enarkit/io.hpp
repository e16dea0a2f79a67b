#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace enarkit::io {

/// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view field, const std::string& context);
long long parse_integer(std::string_view field, const std::string& context);

std::vector<std::string_view> split_csv_line(std::string_view line);

/// Lines of a text file with trailing '\r' stripped; blank trailing lines dropped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace enarkit::io
