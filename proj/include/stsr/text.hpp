#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stsr::text {

// Shortest representation that parses back to the same double.
std::string format_shortest(double v);
// printf-style fixed formatting ("%.6f" for decimals = 6).
std::string format_fixed(double v, int decimals = 6);

// Whole-token parse; throws ParseError naming `what` on failure.
double parse_double(std::string_view token, std::string_view what);
long long parse_int(std::string_view token, std::string_view what);

std::vector<std::string_view> split_ws(std::string_view line);
std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

}  // namespace stsr::text
