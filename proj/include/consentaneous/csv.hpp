#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace consentaneous::csv {

// Shortest representation that round-trips exactly; locale independent.
std::string format(double value);

// Reads a header line and returns its column names. Throws ConfigError when
// the header does not match `expected`.
void expect_header(std::istream& in, const std::vector<std::string_view>& expected);

// Splits the next non-empty line on commas. Returns false at end of input.
bool next_row(std::istream& in, std::vector<std::string>& fields);

double parse_double(std::string_view field);

}  // namespace consentaneous::csv
