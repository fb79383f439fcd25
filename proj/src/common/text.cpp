#include "hypolab/common/text.hpp"

#include <algorithm>
#include <cctype>

namespace hypolab::text {

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && to_lower(a) == to_lower(b);
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

namespace {

// Byte length of the code point starting at s[i]; invalid lead bytes are 1.
std::size_t codepoint_bytes(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
  }
  if (i + len > s.size()) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 1;
  }
  return len;
}

}  // namespace

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); i += codepoint_bytes(s, i)) ++n;
  return n;
}

std::string truncate_utf8(std::string_view s, std::size_t max_chars) {
  if (utf8_length(s) <= max_chars) return std::string(s);
  const std::size_t keep = max_chars >= 2 ? max_chars - 2 : 0;
  std::size_t i = 0;
  for (std::size_t n = 0; n < keep; ++n) i += codepoint_bytes(s, i);
  std::string out(s.substr(0, i));
  out.append(std::min<std::size_t>(2, max_chars), '.');
  return out;
}

std::string pad_right(std::string_view s, std::size_t width) {
  std::string out(s);
  const std::size_t len = utf8_length(s);
  if (len < width) out.append(width - len, ' ');
  return out;
}

std::string pad_left(std::string_view s, std::size_t width) {
  const std::size_t len = utf8_length(s);
  std::string out;
  if (len < width) out.assign(width - len, ' ');
  out += s;
  return out;
}

}  // namespace hypolab::text
