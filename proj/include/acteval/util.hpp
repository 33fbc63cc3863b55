#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace acteval {

std::vector<std::string> split_lines(std::string_view text);

std::string trim(std::string_view s);
std::string rtrim(std::string_view s);

bool starts_with_word(std::string_view line, std::string_view word);

// Join with separator, no trailing separator.
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// FNV-1a 64-bit over the bytes of `data`, rendered as 16 hex digits.
// Stable across platforms, used for prompt digests.
std::string fnv1a_hex(std::string_view data);

// Fixed-point rendering with `decimals` digits, rounding half away from zero.
std::string format_fixed(double value, int decimals);

// ISO-8601 UTC timestamp for "now", second precision.
std::string utc_timestamp();

}  // namespace acteval
