#include "hypolab/stats/permutation.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "hypolab/common/error.hpp"
#include "hypolab/common/rng.hpp"
#include "hypolab/stats/ranks.hpp"

namespace hypolab::stats {

double permutation_test(std::span<const double> a, std::span<const double> b, PermutationStatistic statistic,
                        std::size_t iterations, std::uint64_t rng_seed, PermutationTies ties) {
  if (iterations < 1000) throw InvalidArgument("permutation_test: at least 1000 iterations required");
  if (a.empty() || b.empty()) throw InvalidArgument("permutation_test: both groups must be non-empty");
  const std::size_t na = a.size();
  const std::size_t n = na + b.size();

  // Both statistics are affine in the sum over group a of some per-value
  // score: raw values for the mean difference, midranks for U.
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<double> score = statistic == PermutationStatistic::u_statistic ? midranks(pooled).ranks : pooled;
  const double total = std::accumulate(score.begin(), score.end(), 0.0);
  const double fa = static_cast<double>(na);
  const double fb = static_cast<double>(n - na);

  auto stat = [&](double sum_a) {
    if (statistic == PermutationStatistic::mean_diff) return std::fabs(sum_a / fa - (total - sum_a) / fb);
    return std::fabs(sum_a - fa * (fa + 1.0) / 2.0 - fa * fb / 2.0);
  };
  const double observed = stat(std::accumulate(score.begin(), score.begin() + static_cast<std::ptrdiff_t>(na), 0.0));
  const double tol = 1e-9 * std::max(1.0, std::fabs(observed));

  Rng rng(rng_seed);
  std::size_t above = 0;
  std::size_t equal = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    // Partial Fisher-Yates: the first na slots become a random subset.
    double sum_a = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
      std::swap(score[i], score[j]);
      sum_a += score[i];
    }
    const double s = stat(sum_a);
    if (s > observed + tol) ++above;
    else if (s >= observed - tol) ++equal;
  }
  const double count = ties == PermutationTies::mid_p ? static_cast<double>(above) + 0.5 * static_cast<double>(equal)
                                                      : static_cast<double>(above + equal);
  return (count + 1.0) / static_cast<double>(iterations + 1);
}

}  // namespace hypolab::stats
