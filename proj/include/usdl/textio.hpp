#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace usdl {

/// Hex-float ("%a") rendering; parse_real reads it back bit-exactly.
std::string format_exact(double value);

/// Shortest-ish decimal rendering for human-facing tables (%.17g trimmed).
std::string format_decimal(double value, int precision = 10);

/// Parses a decimal or hex-float real. Throws ParseError naming `context`.
double parse_real(std::string_view text, const std::string& context);
long long parse_integer(std::string_view text, const std::string& context);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace usdl
