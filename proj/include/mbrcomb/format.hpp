#pragma once

#include <string>
#include <string_view>

namespace mbrcomb {

// Shortest decimal that parses back to the same double.
std::string format_shortest(double value);
// printf-style %.{digits}f.
std::string format_fixed(double value, int digits);

// Strict full-string parses; return false on trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::string_view trim(std::string_view text);

}  // namespace mbrcomb
