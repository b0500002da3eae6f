#pragma once

// Minimal RFC 4180 helpers: quoting on write, quote-aware splitting on read.
// Embedded newlines are not supported; every record is one line.

#include <string>
#include <string_view>
#include <vector>

namespace wayfind::csv {

std::string quote(std::string_view field);
std::string join(const std::vector<std::string>& fields);
std::vector<std::string> split(std::string_view line);

/// Locale-independent number parsing of the whole field.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

/// "%.3f" with negative zero printed as "0.000".
std::string fixed3(double v);

}  // namespace wayfind::csv
