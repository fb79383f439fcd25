#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hypolab/data/dataset.hpp"

namespace hypolab::lab {

// Row-wise numeric expression used by derive steps:
//   + - * / and unary minus, numbers, column names (bare identifiers or
//   `back quoted`), log(x), log1p(x), abs(x), bin(x, [e1, e2, ...]) and
//   time_delta(a, b) = a - b in seconds.
// bin returns the number of edges <= x. Nulls and non-finite results
// propagate as null.
class Expression {
 public:
  static Expression parse(const std::string& source);  // throws ParseError

  const std::string& source() const { return source_; }
  const std::set<std::string>& columns() const { return columns_; }
  // Columns used as time_delta arguments.
  const std::set<std::string>& time_columns() const { return time_columns_; }

  std::optional<double> evaluate(const data::Dataset& dataset, std::size_t row) const;

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
  std::set<std::string> columns_;
  std::set<std::string> time_columns_;
};

}  // namespace hypolab::lab
