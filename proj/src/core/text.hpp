#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qrkit::text {

inline bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);

// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::string& path);
// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, std::string_view content);

// format_short drops the leading zero: 0.480 -> ".480".
std::string format_fixed(double value, int decimals);
std::string format_short(double value, int decimals);

}  // namespace qrkit::text
