#include "hypolab/data/load.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <regex>
#include <set>

#include "hypolab/common/error.hpp"
#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::data {
namespace {

std::optional<double> parse_number(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_image_path(std::string_view s) {
  static const std::regex re(R"(^[^\s/\\][^\s]*\.(png|jpe?g|gif|bmp|webp|tiff?)$)", std::regex::icase);
  return std::regex_match(s.begin(), s.end(), re);
}

std::vector<std::vector<std::string>> split_delimited(const std::string& content, char delim) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  if (content.rfind("\xEF\xBB\xBF", 0) == 0) i = 3;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (; i < content.size(); ++i) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      end_row();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw ParseError(fmt::format("unterminated quoted field in data row {}", rows.size()));
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

Dataset build(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& cells,
              const LoadOptions& options) {
  std::set<std::string> seen;
  for (const auto& h : header) {
    if (!seen.insert(h).second) throw ParseError(fmt::format("duplicate header name '{}'", h));
  }
  std::vector<Column> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::vector<std::string> raw;
    raw.reserve(cells.size());
    for (const auto& row : cells) raw.push_back(row[c]);
    auto it = options.kind_overrides.find(header[c]);
    const ColumnKind kind = it != options.kind_overrides.end() ? it->second : infer_kind(raw);
    Column col = make_column(header[c], raw, kind);
    col.identifier_like = looks_like_identifier(col);
    columns.push_back(std::move(col));
  }
  for (const auto& [name, kind] : options.kind_overrides) {
    if (!seen.count(name)) throw InvalidArgument(fmt::format("kind override names unknown column '{}'", name));
  }
  return Dataset(std::move(columns));
}

}  // namespace

bool is_null_token(std::string_view s) {
  s = text::trim(s);
  return s.empty() || s == "NA" || s == "N/A" || s == "null" || s == "None" || s == "NaN";
}

ColumnKind infer_kind(std::span<const std::string> values) {
  std::vector<std::string_view> present;
  for (const auto& v : values) {
    if (!is_null_token(v)) present.push_back(text::trim(v));
  }
  if (present.empty()) return ColumnKind::text;
  if (std::all_of(present.begin(), present.end(), [](auto s) { return parse_number(s).has_value(); })) {
    return ColumnKind::numeric;
  }
  if (std::all_of(present.begin(), present.end(), [](auto s) { return parse_timestamp(s).has_value(); })) {
    return ColumnKind::timestamp;
  }
  if (std::all_of(present.begin(), present.end(), [](auto s) { return is_image_path(s); })) {
    return ColumnKind::image_path;
  }
  const std::set<std::string_view> distinct(present.begin(), present.end());
  const double limit = std::max(20.0, 0.05 * static_cast<double>(values.size()));
  const bool short_values =
      std::all_of(distinct.begin(), distinct.end(), [](auto s) { return text::utf8_length(s) <= 40; });
  if (static_cast<double>(distinct.size()) <= limit && short_values) return ColumnKind::categorical;
  return ColumnKind::text;
}

Column make_column(const std::string& name, std::span<const std::string> raw, ColumnKind kind) {
  Column col{name, kind, {}, false};
  col.values.reserve(raw.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (is_null_token(raw[r])) {
      col.values.emplace_back(std::monostate{});
      continue;
    }
    switch (kind) {
      case ColumnKind::numeric: {
        auto v = parse_number(raw[r]);
        if (!v) throw ParseError(fmt::format("column '{}', row {}: '{}' is not a number", name, r + 1, raw[r]));
        col.values.emplace_back(*v);
        break;
      }
      case ColumnKind::timestamp: {
        auto v = parse_timestamp(text::trim(raw[r]));
        if (!v) v = parse_number(raw[r]);  // epoch seconds
        if (!v) throw ParseError(fmt::format("column '{}', row {}: '{}' is not a timestamp", name, r + 1, raw[r]));
        col.values.emplace_back(*v);
        break;
      }
      case ColumnKind::categorical:
      case ColumnKind::image_path: col.values.emplace_back(std::string(text::trim(raw[r]))); break;
      case ColumnKind::text: col.values.emplace_back(raw[r]); break;
    }
  }
  return col;
}

Dataset parse_table(const std::string& content, TableFormat format, char delimiter, const LoadOptions& options) {
  if (text::trim(content).empty()) throw ParseError("empty file");
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;
  if (format == TableFormat::delimited) {
    auto rows = split_delimited(content, delimiter);
    if (rows.empty()) throw ParseError("empty file");
    header = std::move(rows.front());
    for (auto& h : header) h = std::string(text::trim(h));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != header.size()) {
        throw ParseError(fmt::format("data row {} has {} fields, expected {}", r, rows[r].size(), header.size()));
      }
      cells.push_back(std::move(rows[r]));
    }
  } else {
    std::vector<json> records;
    std::size_t row = 0;
    for (const auto& line : text::split(content, '\n')) {
      if (text::trim(line).empty()) continue;
      ++row;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("data row {}: {}", row, e.what()));
      }
      if (!j.is_object()) throw ParseError(fmt::format("data row {}: expected an object", row));
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it->is_structured()) throw ParseError(fmt::format("data row {}: key '{}' is not flat", row, it.key()));
        if (std::find(header.begin(), header.end(), it.key()) == header.end()) header.push_back(it.key());
      }
      records.push_back(std::move(j));
    }
    for (const auto& j : records) {
      std::vector<std::string> values;
      for (const auto& h : header) {
        auto it = j.find(h);
        if (it == j.end() || it->is_null()) values.emplace_back();
        else if (it->is_string()) values.push_back(it->get<std::string>());
        else values.push_back(it->dump());
      }
      cells.push_back(std::move(values));
    }
  }
  if (cells.empty()) throw ParseError("table has a header but no data rows");
  return build(header, cells, options);
}

Dataset load_table(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw Error(fmt::format("cannot read '{}': no such file", path.string()));
  const std::string content = read_file(path);
  const std::string ext = text::to_lower(path.extension().string());
  TableFormat format = options.format.value_or(ext == ".jsonl" || ext == ".ndjson" ? TableFormat::records
                                                                                     : TableFormat::delimited);
  char delim = ',';
  if (format == TableFormat::delimited) {
    const std::string first_line = content.substr(0, content.find('\n'));
    if (ext == ".tsv" || (first_line.find('\t') != std::string::npos && first_line.find(',') == std::string::npos)) {
      delim = '\t';
    }
  }
  return parse_table(content, format, delim, options);
}

}  // namespace hypolab::data
