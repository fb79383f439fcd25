#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "hypolab/data/dataset.hpp"

namespace hypolab::data {

enum class TableFormat { delimited, records };

struct LoadOptions {
  // Defaults from the extension: .jsonl/.ndjson are records, else delimited.
  std::optional<TableFormat> format;
  // Forces a kind, e.g. epoch-second columns that should be timestamps.
  std::map<std::string, ColumnKind> kind_overrides;
};

/// Delimited files need a header row; the delimiter is a tab for .tsv files
/// or tab-only headers, otherwise a comma. Quoted fields follow RFC 4180.
/// Record files hold one flat object per line. Throws ParseError naming
/// the offending 1-based data row.
Dataset load_table(const std::filesystem::path& path, const LoadOptions& options = {});

/// Same as load_table on in-memory content.
Dataset parse_table(const std::string& content, TableFormat format, char delimiter = ',',
                    const LoadOptions& options = {});

bool is_null_token(std::string_view s);

/// Kind inference. Null tokens ("", NA, N/A, null, None, NaN) are skipped.
/// Precedence: numeric, timestamp, image_path, categorical, text. Categorical
/// additionally requires every value to be at most 40 characters.
ColumnKind infer_kind(std::span<const std::string> values);

/// Converts raw strings to cells of the given kind; throws ParseError when a
/// value does not fit (naming the 1-based row).
Column make_column(const std::string& name, std::span<const std::string> raw, ColumnKind kind);

}  // namespace hypolab::data
