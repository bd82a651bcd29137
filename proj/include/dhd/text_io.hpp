#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dhd {

/// Shortest round-trip decimal form; identical input gives identical bytes.
std::string format_number(double value);

/// Parses a full token as a double; no trailing characters allowed.
std::optional<double> parse_number(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char delimiter);

std::string_view trim(std::string_view text);

}  // namespace dhd
