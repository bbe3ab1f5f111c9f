#include "abcnet/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace abcnet::csv {

std::string format(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf.data(), ptr);
}

std::string format(const std::optional<double>& value) {
  return value ? format(*value) : std::string();
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& fields, char sep) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += sep;
    out += fields[i];
  }
  return out;
}

double parse_double(std::string_view field, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() ||
      ptr != field.data() + field.size()) {
    throw std::invalid_argument("bad value '" + std::string(field) +
                                "' for " + std::string(what));
  }
  return v;
}

long long parse_int(std::string_view field, std::string_view what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() ||
      ptr != field.data() + field.size()) {
    throw std::invalid_argument("bad integer '" + std::string(field) +
                                "' for " + std::string(what));
  }
  return v;
}

std::optional<double> parse_optional(std::string_view field,
                                     std::string_view what) {
  if (field.empty()) return std::nullopt;
  return parse_double(field, what);
}

bool read_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

}  // namespace abcnet::csv
