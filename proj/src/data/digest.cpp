#include "hypolab/data/digest.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>

#include "hypolab/common/error.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::data {
namespace {

std::string two_decimals(double v) {
  if (std::isnan(v)) return "NaN";
  std::string s = fmt::format("{:.2f}", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

}  // namespace

NumericSummary summarize_numeric(const Column& c) {
  std::vector<double> v;
  for (const auto& cell : c.values) {
    if (auto d = as_number(cell)) v.push_back(*d);
  }
  NumericSummary s;
  s.name = c.name;
  s.count = v.size();
  if (v.empty()) {
    s.mean = s.std = s.min = s.q25 = s.median = s.q75 = s.max = std::nan("");
    return s;
  }
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : std::nan("");
  s.min = v.front();
  s.max = v.back();
  s.q25 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q75 = quantile_sorted(v, 0.75);
  return s;
}

namespace {

CategoricalSummary categorical_summary(const Column& c) {
  std::map<std::string, std::size_t> counts;
  for (const auto& cell : c.values) {
    if (const auto* s = as_text(cell)) ++counts[*s];
  }
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (items.size() > 10) items.resize(10);
  return {c.name, std::move(items)};
}

void render_structural(std::string& out, const Dataset& d, const std::vector<ColumnInfo>& cols) {
  const std::size_t n = d.row_count();
  out += "<class 'pandas.core.frame.DataFrame'>\n";
  out += n == 0 ? "RangeIndex: 0 entries\n" : fmt::format("RangeIndex: {} entries, 0 to {}\n", n, n - 1);
  out += fmt::format("Data columns (total {} columns):\n", cols.size());
  std::size_t wname = 6, wnn = 14;
  std::vector<std::string> nn;
  for (const auto& c : cols) {
    wname = std::max(wname, text::utf8_length(c.name));
    nn.push_back(fmt::format("{} non-null", c.non_null));
    wnn = std::max(wnn, nn.back().size());
  }
  out += fmt::format(" #   {}  {}  Dtype\n", text::pad_right("Column", wname), text::pad_right("Non-Null Count", wnn));
  out += fmt::format("---  {}  {}  -----\n", text::pad_right("------", wname), text::pad_right("--------------", wnn));
  std::map<std::string_view, std::size_t> kinds;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += fmt::format(" {}{}  {}  {}\n", text::pad_right(std::to_string(i), 4), text::pad_right(cols[i].name, wname),
                       text::pad_right(nn[i], wnn), to_string(cols[i].kind));
    ++kinds[to_string(cols[i].kind)];
  }
  std::vector<std::string> parts;
  for (const auto& [k, count] : kinds) parts.push_back(fmt::format("{}({})", k, count));
  out += "dtypes: " + text::join(parts, ", ") + "\n";
}

void render_numeric(std::string& out, const std::vector<NumericSummary>& stats) {
  out += "\nNumerical Columns Statistics:\n\n";
  if (stats.empty()) {
    out += "(none)\n";
    return;
  }
  static const char* kLabels[] = {"count", "mean", "std", "min", "25%", "50%", "75%", "max"};
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> widths;
  for (const auto& s : stats) {
    std::vector<std::string> col = {two_decimals(static_cast<double>(s.count)), two_decimals(s.mean),
                                    two_decimals(s.std), two_decimals(s.min), two_decimals(s.q25),
                                    two_decimals(s.median), two_decimals(s.q75), two_decimals(s.max)};
    std::size_t w = text::utf8_length(s.name);
    for (const auto& c : col) w = std::max(w, c.size());
    widths.push_back(w);
    cells.push_back(std::move(col));
  }
  out += std::string(5, ' ');
  for (std::size_t k = 0; k < stats.size(); ++k) out += "  " + text::pad_left(stats[k].name, widths[k]);
  out += '\n';
  for (std::size_t r = 0; r < 8; ++r) {
    out += text::pad_right(kLabels[r], 5);
    for (std::size_t k = 0; k < stats.size(); ++k) out += "  " + text::pad_left(cells[k][r], widths[k]);
    out += '\n';
  }
}

void render_categorical(std::string& out, const std::vector<CategoricalSummary>& cats) {
  out += "\nCategorical Columns Statistics:\n";
  if (cats.empty()) {
    out += "\n(none)\n";
    return;
  }
  for (const auto& c : cats) {
    out += '\n' + c.name + '\n';
    std::size_t wv = 0, wc = 0;
    for (const auto& [v, n] : c.top) {
      wv = std::max(wv, text::utf8_length(v));
      wc = std::max(wc, std::to_string(n).size());
    }
    for (const auto& [v, n] : c.top) {
      out += text::pad_right(v, wv) + "    " + text::pad_left(std::to_string(n), wc) + '\n';
    }
  }
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string sample_cell(const Cell& cell, ColumnKind kind) {
  std::string s = render_cell(cell, kind);
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r' || ch == '\t') ch = ' ';
    else if (ch == '|') ch = '/';
  }
  return text::truncate_utf8(s, kSampleCellLimit);
}

std::string render_rows_table(const Dataset& dataset, const std::vector<std::size_t>& rows,
                              const std::set<std::string>& exclude) {
  std::vector<const Column*> cols;
  for (const auto& c : dataset.columns()) {
    if (!c.identifier_like && !exclude.count(c.name)) cols.push_back(&c);
  }
  std::vector<std::vector<std::string>> cells(rows.size());
  std::vector<std::size_t> widths;
  for (const auto* c : cols) widths.push_back(text::utf8_length(c->name));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= dataset.row_count()) throw InvalidArgument(fmt::format("sample row {} out of range", rows[r]));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      cells[r].push_back(sample_cell(cols[k]->values[rows[r]], cols[k]->kind));
      widths[k] = std::max(widths[k], text::utf8_length(cells[r].back()));
    }
  }
  std::string out = "|";
  for (std::size_t k = 0; k < cols.size(); ++k) out += text::pad_right(cols[k]->name, widths[k]) + "|";
  out += "\n|";
  for (std::size_t k = 0; k < cols.size(); ++k) out += std::string(widths[k], '-') + "|";
  out += '\n';
  for (const auto& row : cells) {
    out += '|';
    for (std::size_t k = 0; k < cols.size(); ++k) out += text::pad_right(row[k], widths[k]) + "|";
    out += '\n';
  }
  return out;
}

DatasetDigest summarize(const Dataset& dataset, const std::vector<std::size_t>& sample_indices) {
  DatasetDigest digest;
  for (const auto& c : dataset.columns()) {
    if (c.identifier_like) continue;
    const auto nn = static_cast<std::size_t>(
        std::count_if(c.values.begin(), c.values.end(), [](const Cell& v) { return !is_null(v); }));
    digest.structural.push_back({c.name, nn, c.kind});
    if (c.kind == ColumnKind::numeric) digest.numeric_summary.push_back(summarize_numeric(c));
    if (c.kind == ColumnKind::categorical) digest.categorical_summary.push_back(categorical_summary(c));
    digest.sample_columns.push_back(c.name);
  }
  for (std::size_t r : sample_indices) {
    if (r >= dataset.row_count()) throw InvalidArgument(fmt::format("sample row {} out of range", r));
    std::vector<std::string> row;
    for (const auto& c : dataset.columns()) {
      if (!c.identifier_like) row.push_back(sample_cell(c.values[r], c.kind));
    }
    digest.sample_rows.push_back(std::move(row));
  }

  std::string& out = digest.rendered_text;
  render_structural(out, dataset, digest.structural);
  render_numeric(out, digest.numeric_summary);
  render_categorical(out, digest.categorical_summary);
  if (!sample_indices.empty()) {
    out += "\nRandom Sample Rows:\n\n";
    out += render_rows_table(dataset, sample_indices);
  }
  return digest;
}

}  // namespace hypolab::data
