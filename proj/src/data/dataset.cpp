#include "hypolab/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>

#include "hypolab/common/error.hpp"

namespace hypolab::data {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::text: return "text";
    case ColumnKind::timestamp: return "timestamp";
    case ColumnKind::image_path: return "image_path";
  }
  return "text";
}

ColumnKind column_kind_from_string(std::string_view name) {
  if (name == "numeric") return ColumnKind::numeric;
  if (name == "categorical") return ColumnKind::categorical;
  if (name == "text") return ColumnKind::text;
  if (name == "timestamp") return ColumnKind::timestamp;
  if (name == "image_path") return ColumnKind::image_path;
  throw InvalidArgument(fmt::format("unknown column kind '{}'", name));
}

std::optional<double> as_number(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::nullopt;
}

const std::string* as_text(const Cell& c) { return std::get_if<std::string>(&c); }

bool looks_like_identifier(const Column& column) {
  const auto& v = column.values;
  if (v.size() < 2) return false;
  if (column.kind == ColumnKind::numeric) {
    std::vector<double> nums;
    for (const auto& c : v) {
      auto d = as_number(c);
      if (!d || *d != std::floor(*d)) return false;
      nums.push_back(*d);
    }
    std::sort(nums.begin(), nums.end());
    for (std::size_t i = 1; i < nums.size(); ++i) {
      if (nums[i] != nums[i - 1] + 1.0) return false;
    }
    return true;
  }
  if (column.kind == ColumnKind::timestamp) return false;
  std::set<std::string_view> seen;
  for (const auto& c : v) {
    const auto* s = as_text(c);
    if (!s || s->empty()) return false;
    if (std::any_of(s->begin(), s->end(), [](unsigned char ch) { return std::isspace(ch); })) return false;
    if (!seen.insert(*s).second) return false;
  }
  return true;
}

Dataset::Dataset(std::vector<Column> columns) {
  for (auto& c : columns) add_column(std::move(c));
}

std::optional<std::size_t> Dataset::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

const Column& Dataset::column(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw InvalidArgument(fmt::format("no column named '{}'", name));
  return columns_[*i];
}

void Dataset::set_outcome(const std::string& name) {
  auto i = index_of(name);
  if (!i) throw InvalidArgument(fmt::format("outcome column '{}' does not exist", name));
  const auto kind = columns_[*i].kind;
  if (kind != ColumnKind::numeric && kind != ColumnKind::categorical) {
    throw InvalidArgument(fmt::format("outcome column '{}' must be numeric or categorical, found {}", name,
                                      to_string(kind)));
  }
  outcome_ = name;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.rows_ = rows.size();
  out.outcome_ = outcome_;
  out.columns_.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column nc{c.name, c.kind, {}, c.identifier_like};
    nc.values.reserve(rows.size());
    for (std::size_t r : rows) {
      if (r >= rows_) throw InvalidArgument(fmt::format("row index {} out of range", r));
      nc.values.push_back(c.values[r]);
    }
    out.columns_.push_back(std::move(nc));
  }
  return out;
}

std::map<std::string, ColumnKind> Dataset::schema() const {
  std::map<std::string, ColumnKind> out;
  for (const auto& c : columns_) out.emplace(c.name, c.kind);
  return out;
}

void Dataset::add_column(Column column) {
  if (column.name.empty()) throw InvalidArgument("column name must be non-empty");
  if (has_column(column.name)) throw InvalidArgument(fmt::format("duplicate column name '{}'", column.name));
  if (!columns_.empty() && column.values.size() != rows_) {
    throw InvalidArgument(fmt::format("column '{}' has {} values, expected {}", column.name, column.values.size(),
                                      rows_));
  }
  const bool numeric_kind = column.kind == ColumnKind::numeric || column.kind == ColumnKind::timestamp;
  for (const auto& v : column.values) {
    if (is_null(v)) continue;
    if (numeric_kind != std::holds_alternative<double>(v)) {
      throw InvalidArgument(fmt::format("column '{}' holds a value of the wrong type for kind {}", column.name,
                                        to_string(column.kind)));
    }
  }
  if (columns_.empty()) rows_ = column.values.size();
  column.identifier_like = column.identifier_like || looks_like_identifier(column);
  columns_.push_back(std::move(column));
}

Dataset augment_column(const Dataset& dataset, const std::string& name, ColumnKind kind, std::vector<Cell> values) {
  Column c{name, kind, std::move(values), false};
  c.identifier_like = looks_like_identifier(c);
  Dataset out = dataset;
  out.add_column(std::move(c));
  return out;
}

namespace {

// Howard Hinnant's days_from_civil.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, long long& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  out = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  pos += count;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace

std::optional<double> parse_timestamp(std::string_view s) {
  std::size_t pos = 0;
  int year, month, day;
  if (!read_digits(s, pos, 4, year) || !expect(s, pos, '-') || !read_digits(s, pos, 2, month) ||
      !expect(s, pos, '-') || !read_digits(s, pos, 2, day)) {
    return std::nullopt;
  }
  static constexpr int kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12 || day < 1 || day > kDays[month - 1]) return std::nullopt;
  double seconds = static_cast<double>(days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day))) * 86400.0;
  if (pos == s.size()) return seconds;
  if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
  ++pos;
  int hh, mm, ss = 0;
  if (!read_digits(s, pos, 2, hh) || !expect(s, pos, ':') || !read_digits(s, pos, 2, mm)) return std::nullopt;
  if (expect(s, pos, ':') && !read_digits(s, pos, 2, ss)) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  seconds += hh * 3600.0 + mm * 60.0 + ss;
  if (expect(s, pos, '.')) {
    double scale = 0.1;
    std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      seconds += (s[pos] - '0') * scale;
      scale /= 10.0;
      ++pos;
    }
    if (pos == start) return std::nullopt;
  }
  if (pos == s.size() || expect(s, pos, 'Z')) return pos == s.size() ? std::optional(seconds) : std::nullopt;
  if (s[pos] == '+' || s[pos] == '-') {
    const double sign = s[pos] == '+' ? 1.0 : -1.0;
    ++pos;
    int oh, om = 0;
    if (!read_digits(s, pos, 2, oh)) return std::nullopt;
    expect(s, pos, ':');
    if (pos < s.size() && !read_digits(s, pos, 2, om)) return std::nullopt;
    if (pos != s.size()) return std::nullopt;
    return seconds - sign * (oh * 3600.0 + om * 60.0);
  }
  return std::nullopt;
}

std::string format_timestamp(double seconds) {
  const double whole = std::floor(seconds);
  const long long t = static_cast<long long>(whole);
  long long days = t / 86400;
  long long rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  long long y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02}", y, m, d, rem / 3600, (rem / 60) % 60, rem % 60);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == std::floor(v) && std::fabs(v) < 1e15) return fmt::format("{}", static_cast<long long>(v));
  return fmt::format("{}", v);
}

std::string render_cell(const Cell& c, ColumnKind kind) {
  if (is_null(c)) return "";
  if (const auto* d = std::get_if<double>(&c)) {
    return kind == ColumnKind::timestamp ? format_timestamp(*d) : format_number(*d);
  }
  return std::get<std::string>(c);
}

}  // namespace hypolab::data
