#include "hypolab/stats/hypothesis_tests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hypolab/common/error.hpp"
#include "hypolab/stats/distributions.hpp"
#include "hypolab/stats/ranks.hpp"

namespace hypolab::stats {
namespace {

constexpr double kZ975 = 1.959963984540054;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance
};

Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss / (n - 1.0)};
}

}  // namespace

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("welch_t_test: each group needs at least 2 values");
  const auto ma = moments(a);
  const auto mb = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  TestResult r;
  r.test_name = "welch_t";
  r.group_sizes = {a.size(), b.size()};

  const double diff = ma.mean - mb.mean;
  const double pooled_sd = std::sqrt(((na - 1.0) * ma.var + (nb - 1.0) * mb.var) / (na + nb - 2.0));
  const double va = ma.var / na;
  const double vb = mb.var / nb;
  const double se2 = va + vb;

  double d = 0.0;
  if (se2 <= 0.0) {
    r.degrees_of_freedom = na + nb - 2.0;
    if (diff == 0.0) {
      r.statistic = 0.0;
      r.p_two_sided = 1.0;
      r.warnings.push_back("degenerate: both groups have zero variance and equal means");
    } else {
      r.statistic = std::copysign(kInf, diff);
      r.p_two_sided = 0.0;
      d = std::copysign(kInf, diff);
      r.warnings.push_back("degenerate: both groups have zero variance with different means");
    }
    r.effect = {EffectKind::cohens_d, d, std::nullopt, std::nullopt};
    return r;
  }

  r.statistic = diff / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.degrees_of_freedom = df;
  r.p_two_sided = student_t_two_sided_p(r.statistic, df);

  d = pooled_sd > 0.0 ? diff / pooled_sd : 0.0;
  const double se_d = std::sqrt((na + nb) / (na * nb) + d * d / (2.0 * (na + nb)));
  r.effect = {EffectKind::cohens_d, d, d - kZ975 * se_d, d + kZ975 * se_d};
  return r;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("mann_whitney_u: both groups must be non-empty");
  if (a.size() + b.size() < 8) {
    throw InvalidArgument("mann_whitney_u: normal approximation needs at least 8 observations in total");
  }
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const RankSummary ranks = midranks(pooled);

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks.ranks[i];
  const double u_a = rank_sum_a - na * (na + 1.0) / 2.0;
  const double u_b = na * nb - u_a;

  TestResult r;
  r.test_name = "mann_whitney_u";
  r.statistic = u_a;
  r.group_sizes = {a.size(), b.size()};

  const double mean_u = na * nb / 2.0;
  const double var_u = na * nb / 12.0 * ((n + 1.0) - ranks.tie_term / (n * (n - 1.0)));
  if (var_u <= 0.0) {
    r.p_two_sided = 1.0;
    r.effect = {EffectKind::rank_biserial_r, 0.0, std::nullopt, std::nullopt};
    r.warnings.push_back("degenerate: all values identical");
    return r;
  }
  const double z = std::max(0.0, std::fabs(u_a - mean_u) - 0.5) / std::sqrt(var_u);
  r.p_two_sided = std::min(1.0, normal_two_sided_p(z));
  const double rb = std::clamp(1.0 - 2.0 * u_b / (na * nb), -1.0, 1.0);
  r.effect = {EffectKind::rank_biserial_r, rb, std::nullopt, std::nullopt};
  return r;
}

TestResult chi_square_independence(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw InvalidArgument("chi_square_independence: table must be at least 2x2");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw InvalidArgument("chi_square_independence: table must be at least 2x2");
  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) throw InvalidArgument("chi_square_independence: ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!(table[i][j] >= 0.0)) throw InvalidArgument("chi_square_independence: negative count");
      row_sum[i] += table[i][j];
      col_sum[j] += table[i][j];
    }
  }
  for (double s : row_sum) {
    if (s <= 0.0) throw InvalidArgument("chi_square_independence: degenerate margin");
  }
  for (double s : col_sum) {
    if (s <= 0.0) throw InvalidArgument("chi_square_independence: degenerate margin");
  }
  const double total = std::accumulate(row_sum.begin(), row_sum.end(), 0.0);

  TestResult r;
  r.test_name = "chi_square";
  double stat = 0.0;
  bool small_expected = false;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      if (expected < 5.0) small_expected = true;
      const double dev = table[i][j] - expected;
      stat += dev * dev / expected;
    }
  }
  const double df = static_cast<double>((rows - 1) * (cols - 1));
  r.statistic = stat;
  r.degrees_of_freedom = df;
  r.p_two_sided = chi_square_sf(stat, df);
  const double k = static_cast<double>(std::min(rows, cols) - 1);
  r.effect = {EffectKind::cramers_v, std::sqrt(stat / (total * k)), std::nullopt, std::nullopt};
  for (double s : row_sum) r.group_sizes.push_back(static_cast<std::size_t>(std::llround(s)));
  if (small_expected) r.warnings.push_back("expected count below 5 in at least one cell");
  return r;
}

TestResult two_proportion_z(std::uint64_t x1, std::uint64_t n1, std::uint64_t x2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) throw InvalidArgument("two_proportion_z: trials must be positive");
  if (x1 > n1 || x2 > n2) throw InvalidArgument("two_proportion_z: successes exceed trials");
  const double s1 = static_cast<double>(x1);
  const double s2 = static_cast<double>(x2);
  const double t1 = static_cast<double>(n1);
  const double t2 = static_cast<double>(n2);
  const double p1 = s1 / t1;
  const double p2 = s2 / t2;
  const double pooled = (s1 + s2) / (t1 + t2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / t1 + 1.0 / t2));

  TestResult r;
  r.test_name = "two_proportion_z";
  r.group_sizes = {n1, n2};
  if (se > 0.0) {
    r.statistic = (p1 - p2) / se;
    r.p_two_sided = normal_two_sided_p(r.statistic);
  } else {
    r.statistic = 0.0;
    r.p_two_sided = 1.0;
    r.warnings.push_back("degenerate: pooled proportion is 0 or 1");
  }

  // Odds ratio, Woolf interval; Haldane-Anscombe correction for empty cells.
  double a = s1, b = t1 - s1, c = s2, d = t2 - s2;
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    r.warnings.push_back("zero cell: odds ratio uses a 0.5 correction");
  }
  const double log_or = std::log((a * d) / (b * c));
  const double se_log_or = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
  r.effect = {EffectKind::odds_ratio, std::exp(log_or), std::exp(log_or - kZ975 * se_log_or),
              std::exp(log_or + kZ975 * se_log_or)};

  EffectSize rr{EffectKind::relative_risk, 0.0, std::nullopt, std::nullopt};
  if (x2 == 0) {
    rr.value = kInf;
    r.warnings.push_back("relative risk undefined: no successes in second group");
  } else if (x1 == 0) {
    rr.value = 0.0;
    r.warnings.push_back("relative risk is zero: no successes in first group");
  } else {
    rr.value = p1 / p2;
    const double se_log_rr = std::sqrt(1.0 / s1 - 1.0 / t1 + 1.0 / s2 - 1.0 / t2);
    rr.ci_low = std::exp(std::log(rr.value) - kZ975 * se_log_rr);
    rr.ci_high = std::exp(std::log(rr.value) + kZ975 * se_log_rr);
  }
  r.extra_effects.push_back(rr);
  return r;
}

}  // namespace hypolab::stats
