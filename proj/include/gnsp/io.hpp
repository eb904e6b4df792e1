#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gnsp::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);
std::optional<std::uint64_t> parse_uint(std::string_view text);

/// Splits one CSV line on commas. No quoting: none of our formats need it.
std::vector<std::string_view> split_csv(std::string_view line);

std::string_view trim(std::string_view s);

/// Reads a whole file; throws ParseError(kIo) when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes (truncate + write); throws
/// std::runtime_error on failure.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace gnsp::io
