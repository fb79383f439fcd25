#pragma once

#include <span>
#include <string>
#include <vector>

#include "hypolab/stats/types.hpp"

namespace hypolab::stats {

struct LogisticOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;
  double ridge_penalty = 0.0;
};

/// Named design columns without the intercept; it is added internally and
/// reported first as "(intercept)".
struct DesignMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // columns[k][row]

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Logistic regression by IRLS (Newton with step halving). Standard errors
/// come from the inverse information at the final estimate. A fit whose
/// non-intercept |beta| exceeds 15 without ridge is reported as
/// non-converged with a "separation" warning. Throws on a singular
/// information matrix.
RegressionResult logistic_regression(const DesignMatrix& x, std::span<const double> y,
                                     const LogisticOptions& options = {});

}  // namespace hypolab::stats
