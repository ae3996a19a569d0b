#include "consentaneous/csv.hpp"

#include <charconv>
#include <istream>
#include <system_error>

#include "consentaneous/error.hpp"

namespace consentaneous::csv {

std::string format(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void expect_header(std::istream& in, const std::vector<std::string_view>& expected) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header");
  strip_cr(line);
  const auto names = split(line);
  bool ok = names.size() == expected.size();
  for (std::size_t i = 0; ok && i < names.size(); ++i) ok = names[i] == expected[i];
  if (!ok) throw ConfigError("csv: unexpected header '" + line + "'");
}

bool next_row(std::istream& in, std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    fields = split(line);
    return true;
  }
  return false;
}

double parse_double(std::string_view field) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto result = std::from_chars(field.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ConfigError("csv: not a number '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace consentaneous::csv
