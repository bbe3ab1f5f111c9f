#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace abcnet::csv {

/// Shortest decimal form that parses back to the same double.
std::string format(double value);
std::string format(const std::optional<double>& value);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string join(const std::vector<std::string>& fields, char sep = ',');

/// Throws std::invalid_argument naming `what` on malformed input.
double parse_double(std::string_view field, std::string_view what);
long long parse_int(std::string_view field, std::string_view what);
std::optional<double> parse_optional(std::string_view field,
                                     std::string_view what);

/// Next non-empty line with any trailing '\r' removed; false at end of input.
bool read_line(std::istream& is, std::string& line);

}  // namespace abcnet::csv
