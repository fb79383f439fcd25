#include "hypolab/stats/multiple_testing.hpp"

#include <algorithm>

#include "hypolab/common/error.hpp"

namespace hypolab::stats {

double bonferroni_threshold(double alpha, std::size_t m) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("bonferroni_threshold: alpha must be in (0,1)");
  if (m == 0) throw InvalidArgument("bonferroni_threshold: m must be at least 1");
  return alpha / static_cast<double>(m);
}

std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("benjamini_hochberg: q must be in (0,1)");
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("benjamini_hochberg: p values must be in [0,1]");
  }
  std::vector<double> sorted(p_values.begin(), p_values.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double cutoff = -1.0;
  for (std::size_t k = sorted.size(); k-- > 0;) {
    if (sorted[k] <= static_cast<double>(k + 1) * q / m) {
      cutoff = sorted[k];
      break;
    }
  }
  std::vector<bool> mask(p_values.size());
  for (std::size_t i = 0; i < p_values.size(); ++i) mask[i] = p_values[i] <= cutoff;
  return mask;
}

}  // namespace hypolab::stats
