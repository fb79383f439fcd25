#include "hypolab/data/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>

#include "hypolab/common/error.hpp"
#include "hypolab/common/log.hpp"
#include "hypolab/common/rng.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::data {

SamplingStrategy SamplingStrategy::parse(const std::string& s) {
  const auto parts = text::split(s, ':');
  SamplingStrategy out;
  const std::string name = text::to_lower(parts[0]);
  if (name == "none") out.kind = Kind::none;
  else if (name == "random") out.kind = Kind::random;
  else if (name == "boosting") out.kind = Kind::boosting;
  else if (name == "clustering") out.kind = Kind::clustering;
  else throw InvalidArgument(fmt::format("unknown sampling strategy '{}'", s));
  try {
    if (parts.size() > 1) out.k = std::stoul(parts[1]);
    if (parts.size() > 2) out.num_clusters = std::stoul(parts[2]);
  } catch (const std::exception&) {
    throw InvalidArgument(fmt::format("bad sampling strategy '{}'", s));
  }
  if (parts.size() > 3 || (out.kind != Kind::clustering && parts.size() > 2)) {
    throw InvalidArgument(fmt::format("bad sampling strategy '{}'", s));
  }
  if (out.kind != Kind::none && out.k == 0) throw InvalidArgument("sampling k must be at least 1");
  if (out.kind == Kind::clustering && out.num_clusters == 0) throw InvalidArgument("num_clusters must be at least 1");
  return out;
}

std::string SamplingStrategy::to_string() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::random: return fmt::format("random:{}", k);
    case Kind::boosting: return fmt::format("boosting:{}", k);
    case Kind::clustering: return fmt::format("clustering:{}:{}", k, num_clusters);
  }
  return "none";
}

namespace {

std::vector<std::size_t> random_sample(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

std::vector<std::size_t> kmeans(const std::vector<std::vector<double>>& points, std::size_t clusters,
                                std::uint64_t rng_seed, int max_iterations) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("kmeans: points differ in dimension");
  }
  Rng rng(rng_seed);
  // Initial centers: distinct rows (distinct by value where possible).
  std::vector<std::vector<double>> centers;
  for (std::size_t i : random_sample(n, n, rng)) {
    if (centers.size() == clusters) break;
    if (std::none_of(centers.begin(), centers.end(), [&](const auto& c) { return c == points[i]; })) {
      centers.push_back(points[i]);
    }
  }
  const std::size_t k = centers.size();
  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep the old center
      for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
  return assign;
}

std::vector<std::size_t> sample_observations(const Dataset& dataset, const SamplingStrategy& strategy,
                                             std::uint64_t rng_seed, const SamplingAux& aux) {
  const std::size_t n = dataset.row_count();
  Rng rng(rng_seed);
  switch (strategy.kind) {
    case SamplingStrategy::Kind::none: return {};
    case SamplingStrategy::Kind::random: return random_sample(n, strategy.k, rng);
    case SamplingStrategy::Kind::boosting: {
      if (aux.weights.size() != n) throw InvalidArgument("boosting sampling needs one weight per row");
      std::vector<double> w = aux.weights;
      double total = 0.0;
      for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("boosting weights must be finite and non-negative");
        total += v;
      }
      if (total <= 0.0) {
        log_warning("boosting sampling: all weights are zero, falling back to random sampling");
        return random_sample(n, strategy.k, rng);
      }
      std::vector<std::size_t> out;
      const std::size_t k = std::min(strategy.k, n);
      while (out.size() < k && total > 0.0) {
        double u = rng.uniform() * total;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (w[i] <= 0.0) continue;
          pick = i;
          if (u < w[i]) break;
          u -= w[i];
        }
        out.push_back(pick);
        total -= w[pick];
        w[pick] = 0.0;
        // Recompute to avoid drift from repeated subtraction.
        if (total < 1e-12) total = std::accumulate(w.begin(), w.end(), 0.0);
      }
      if (out.size() < k) {
        // Fewer positive weights than k: fill uniformly from the rest.
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i) {
          if (std::find(out.begin(), out.end(), i) == out.end()) rest.push_back(i);
        }
        for (std::size_t j : random_sample(rest.size(), k - out.size(), rng)) out.push_back(rest[j]);
      }
      return out;
    }
    case SamplingStrategy::Kind::clustering: {
      if (aux.embeddings.size() != n) throw InvalidArgument("clustering sampling needs one embedding per row");
      const auto assign = kmeans(aux.embeddings, strategy.num_clusters, derive_seed(rng_seed, 1));
      std::size_t k_used = 0;
      for (std::size_t a : assign) k_used = std::max(k_used, a + 1);
      std::vector<std::vector<std::size_t>> members(k_used);
      for (std::size_t i = 0; i < n; ++i) members[assign[i]].push_back(i);
      for (auto& m : members) rng.shuffle(m);
      std::vector<std::size_t> out;
      const std::size_t k = std::min(strategy.k, n);
      for (std::size_t round = 0; out.size() < k; ++round) {
        for (auto& m : members) {
          if (round < m.size() && out.size() < k) out.push_back(m[round]);
        }
      }
      return out;
    }
  }
  return {};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_indices(std::size_t rows, double test_fraction,
                                                                              std::uint64_t rng_seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must be in (0,1)");
  if (rows < 4) throw InvalidArgument("holdout split needs at least 4 rows");
  Rng rng(rng_seed);
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, rows - 1);
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

std::pair<Dataset, Dataset> holdout_split(const Dataset& dataset, double test_fraction, std::uint64_t rng_seed) {
  auto [train, test] = holdout_indices(dataset.row_count(), test_fraction, rng_seed);
  return {dataset.select_rows(train), dataset.select_rows(test)};
}

}  // namespace hypolab::data
