#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace irradcast::text {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
/// Fixed-point rendering with the given number of decimals.
std::string format_fixed(double v, int decimals);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_whitespace(std::string_view s);
/// Splits into lines, dropping a trailing '\r' on each.
std::vector<std::string_view> lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::uint32_t crc32(std::string_view bytes);

}  // namespace irradcast::text
