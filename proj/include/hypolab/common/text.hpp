#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hypolab::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Number of UTF-8 code points (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

/// Keeps at most `max_chars` code points; longer input is cut to
/// `max_chars - 2` code points followed by "..".
std::string truncate_utf8(std::string_view s, std::size_t max_chars);

/// Pads with spaces on the right (left-aligned) to `width` code points.
std::string pad_right(std::string_view s, std::size_t width);
/// Pads with spaces on the left (right-aligned) to `width` code points.
std::string pad_left(std::string_view s, std::size_t width);

}  // namespace hypolab::text
