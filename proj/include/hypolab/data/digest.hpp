#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hypolab/data/dataset.hpp"

namespace hypolab::data {

struct ColumnInfo {
  std::string name;
  std::size_t non_null = 0;
  ColumnKind kind = ColumnKind::text;
};

struct NumericSummary {
  std::string name;
  std::size_t count = 0;
  double mean = 0, std = 0, min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

struct CategoricalSummary {
  std::string name;
  std::vector<std::pair<std::string, std::size_t>> top;  // count desc, then value
};

struct DatasetDigest {
  std::vector<ColumnInfo> structural;
  std::vector<NumericSummary> numeric_summary;
  std::vector<CategoricalSummary> categorical_summary;
  std::vector<std::string> sample_columns;
  std::vector<std::vector<std::string>> sample_rows;
  std::string rendered_text;
};

inline constexpr std::size_t kSampleCellLimit = 100;

/// Verbalizes the dataset. Identifier-like columns are left out everywhere.
/// Sample rows appear in the order given; an empty list omits the block.
DatasetDigest summarize(const Dataset& dataset, const std::vector<std::size_t>& sample_indices);

/// Pipe table of the given rows (digest sample-row format), skipping
/// identifier-like columns and any listed in `exclude`.
std::string render_rows_table(const Dataset& dataset, const std::vector<std::size_t>& rows,
                              const std::set<std::string>& exclude = {});

/// Cell text as shown in a sample table: newlines and tabs become spaces,
/// '|' becomes '/', and the result is cut to 100 characters.
std::string sample_cell(const Cell& cell, ColumnKind kind);

NumericSummary summarize_numeric(const Column& column);

/// Linear-interpolation quantile (R type 7) of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace hypolab::data
