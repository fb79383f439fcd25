#pragma once

#include <cstdint>
#include <span>

namespace hypolab::stats {

enum class PermutationStatistic { mean_diff, u_statistic };

// How permutations whose statistic equals the observed one are counted.
// mid_p counts them half, which suits small samples where the permutation
// distribution is a coarse lattice.
enum class PermutationTies { inclusive, mid_p };

/// Two-sided permutation p-value (count + 1) / (iterations + 1), comparing
/// |mean(a) - mean(b)| or |U_a - |a||b|/2| under random relabelling.
double permutation_test(std::span<const double> a, std::span<const double> b, PermutationStatistic statistic,
                        std::size_t iterations, std::uint64_t rng_seed,
                        PermutationTies ties = PermutationTies::inclusive);

}  // namespace hypolab::stats
