#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace assertctl::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;
bool is_space(char c) noexcept;

// Whitespace-separated maximal non-space runs.
std::vector<std::string_view> split_whitespace(std::string_view s);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s) noexcept;

// Byte offset of code point `index`; index == utf8_length(s) maps to s.size().
// Returns npos when index is past the end.
std::size_t utf8_byte_offset(std::string_view s, std::size_t index) noexcept;

// Code-point index of a byte offset that sits on a code point boundary.
std::size_t utf8_char_index(std::string_view s, std::size_t byte_offset) noexcept;

}  // namespace assertctl::text
