#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypolab/data/dataset.hpp"

namespace hypolab::data {

struct SamplingStrategy {
  enum class Kind { random, clustering, boosting, none };
  Kind kind = Kind::random;
  std::size_t k = 5;
  std::size_t num_clusters = 5;  // clustering only

  static SamplingStrategy parse(const std::string& s);  // "random", "random:5", "clustering:5:3", ...
  std::string to_string() const;
};

struct SamplingAux {
  std::vector<double> weights;                  // boosting: per-row error magnitude
  std::vector<std::vector<double>> embeddings;  // clustering: per-row vectors
};

/// Indices in draw order; deterministic given the seed. Boosting draws
/// proportional to weight without replacement (falling back to random when
/// all weights are zero); clustering runs k-means and takes one row per
/// cluster in turn.
std::vector<std::size_t> sample_observations(const Dataset& dataset, const SamplingStrategy& strategy,
                                             std::uint64_t rng_seed, const SamplingAux& aux = {});

/// Lloyd's algorithm (max 50 iterations) seeded with distinct random rows.
/// Returns a cluster id per point.
std::vector<std::size_t> kmeans(const std::vector<std::vector<double>>& points, std::size_t clusters,
                                std::uint64_t rng_seed, int max_iterations = 50);

/// Random partition into (train, test); the test part has
/// round(n * test_fraction) rows. Rows keep their original order.
std::pair<Dataset, Dataset> holdout_split(const Dataset& dataset, double test_fraction, std::uint64_t rng_seed);

/// Index form of holdout_split.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_indices(std::size_t rows, double test_fraction,
                                                                              std::uint64_t rng_seed);

}  // namespace hypolab::data
