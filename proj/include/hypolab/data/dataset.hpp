#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hypolab::data {

enum class ColumnKind { numeric, categorical, text, timestamp, image_path };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view name);

// Numeric and timestamp cells hold doubles (timestamps as Unix seconds,
// UTC); the other kinds hold strings.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }
std::optional<double> as_number(const Cell& c);
const std::string* as_text(const Cell& c);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::text;
  std::vector<Cell> values;
  // Row ids, hashes and similar: kept for grouping, left out of the digest.
  // Dataset sets it when a column is added if looks_like_identifier holds.
  bool identifier_like = false;
};

// Heuristic used for Column::identifier_like: an all-distinct string column
// without whitespace, or a numeric column of consecutive integers.
bool looks_like_identifier(const Column& column);

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Column> columns);

  std::size_t row_count() const { return rows_; }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }

  bool has_column(std::string_view name) const { return index_of(name).has_value(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  const Column& column(std::string_view name) const;  // throws InvalidArgument

  const std::optional<std::string>& outcome_column() const { return outcome_; }
  // Throws unless `name` is an existing numeric or categorical column.
  void set_outcome(const std::string& name);

  // Copy containing only the given rows, in the given order.
  Dataset select_rows(const std::vector<std::size_t>& rows) const;

  std::map<std::string, ColumnKind> schema() const;

  // In-place counterpart of augment_column.
  void add_column(Column column);

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
  std::optional<std::string> outcome_;
};

/// Returns a copy with the column appended (identifier flag recomputed).
/// Throws InvalidArgument on length mismatch or a duplicate name.
Dataset augment_column(const Dataset& dataset, const std::string& name, ColumnKind kind, std::vector<Cell> values);

/// Parses ISO-8601 dates and date-times ("2023-01-05", "2023-01-05T10:00:00",
/// optional fraction, "Z" or +hh:mm offset, space separator allowed) to Unix
/// seconds.
std::optional<double> parse_timestamp(std::string_view s);
std::string format_timestamp(double seconds);  // "YYYY-MM-DD HH:MM:SS" UTC

/// Integral values print without a fraction; others in shortest round-trip form.
std::string format_number(double v);

/// Display form of a cell: "" for null.
std::string render_cell(const Cell& c, ColumnKind kind);

}  // namespace hypolab::data
