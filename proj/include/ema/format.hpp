#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ema {

// Fixed-point with 6 decimals; negative zero is printed as zero so
// equal values always produce equal bytes.
std::string fixed6(double v);
std::string fixed(double v, int decimals);

std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::vector<std::string_view> split_ws(std::string_view line);
std::vector<std::string_view> split_char(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Splits into lines, dropping a trailing '\r' from each.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace ema
