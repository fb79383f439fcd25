#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hypolab/common/error.hpp"
#include "hypolab/common/rng.hpp"
#include "hypolab/stats/distributions.hpp"
#include "hypolab/stats/effect.hpp"
#include "hypolab/stats/hypothesis_tests.hpp"
#include "hypolab/stats/logistic.hpp"
#include "hypolab/stats/multiple_testing.hpp"
#include "hypolab/stats/permutation.hpp"

using namespace hypolab;
using namespace hypolab::stats;

// Reference values computed with mpmath at 40 significant digits.
TEST_CASE("student t cdf matches high precision references") {
  struct Row { double t, df, cdf; };
  const Row rows[] = {
      {0.5, 1, 0.64758361765043327418},     {-1.2, 2, 0.17650168038968475978},
      {2.0, 3, 0.93033701572057841158},     {1.5, 4.5, 0.89989045717192324008},
      {-0.3, 5, 0.38812452113163723331},    {2.228, 10, 0.97499411409144431732},
      {3.5, 7.3, 0.99532843073575722121},   {-2.5, 15, 0.012252901623256922717},
      {1.0, 30, 0.83734569228698505438},    {0.1, 100, 0.53972773445207438392},
      {4.0, 2.2, 0.97563468663611801179},   {-6.0, 12, 0.000031083694324292824179},
  };
  for (const auto& r : rows) {
    CAPTURE(r.t);
    CAPTURE(r.df);
    CHECK(std::fabs(student_t_cdf(r.t, r.df) - r.cdf) < 1e-8);
  }
}

TEST_CASE("normal cdf matches high precision references") {
  const double rows[][2] = {
      {-5, 2.8665157187919391167e-7}, {-3, 0.0013498980316300945267}, {-1.96, 0.024997895148220436213},
      {-1, 0.15865525393145705141},   {-0.5, 0.30853753872598689636}, {0, 0.5},
      {0.3, 0.61791142218895263307},  {1, 0.84134474606854294859},    {1.645, 0.95001509446087863655},
      {2.5, 0.99379033467422386483},  {3.7, 0.99989220026652261174},  {6, 0.99999999901341235496},
  };
  for (const auto& r : rows) {
    CAPTURE(r[0]);
    CHECK(std::fabs(normal_cdf(r[0]) - r[1]) < 1e-8);
  }
}

TEST_CASE("chi-square cdf and survival match high precision references") {
  const double rows[][4] = {
      {0.5, 1, 0.52049987781304653768, 0.47950012218695346232},
      {1.0, 1, 0.68268949213708589717, 0.31731050786291410283},
      {3.841, 1, 0.94998631623604330092, 0.050013683763956699076},
      {2.0, 2, 0.6321205588285576784, 0.3678794411714423216},
      {5.991, 2, 0.94998838497342091038, 0.050011615026579089616},
      {1.0, 3, 0.19874804309879919757, 0.80125195690120080243},
      {7.815, 3, 0.95000609702511611299, 0.04999390297488388701},
      {4.0, 4, 0.59399415029016192432, 0.40600584970983807568},
      {10.0, 5, 0.92476475385348782128, 0.075235246146512178722},
      {20.0, 10, 0.97074731192303892733, 0.029252688076961072673},
      {0.2, 0.5, 0.60833884572896606698, 0.39166115427103393302},
      {53.333333333333336, 1, 0.99999999999971851067, 2.8148933417503789609e-13},
  };
  for (const auto& r : rows) {
    CAPTURE(r[0]);
    CAPTURE(r[1]);
    CHECK(std::fabs(chi_square_cdf(r[0], r[1]) - r[2]) < 1e-8);
    CHECK(std::fabs(chi_square_sf(r[0], r[1]) - r[3]) < 1e-8);
  }
  // relative accuracy in the far tail
  CHECK(std::fabs(chi_square_sf(53.333333333333336, 1) / 2.8148933417503789609e-13 - 1.0) < 1e-6);
}

TEST_CASE("welch t-test") {
  const std::vector<double> x{1, 2, 3};
  auto same = welch_t_test(x, x);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_two_sided == doctest::Approx(1.0));
  CHECK(same.effect.value == 0.0);

  const std::vector<double> a{1, 2, 3, 4, 5}, b{3, 4, 5, 6, 7};
  auto r = welch_t_test(a, b);
  CHECK(r.degrees_of_freedom.value() == doctest::Approx(8.0));
  CHECK(r.statistic == doctest::Approx(-2.0));
  // Five-vs-five relabellings form a coarse lattice with many exact ties at
  // the observed statistic, so the oracle counts ties half.
  const double oracle = permutation_test(a, b, PermutationStatistic::mean_diff, 200000, 11, PermutationTies::mid_p);
  CHECK(std::fabs(r.p_two_sided - oracle) < 0.02);
  // pooled sd = sqrt(2.5), d = -2 / sqrt(2.5)
  CHECK(r.effect.value == doctest::Approx(-2.0 / std::sqrt(2.5)));

  auto rev = welch_t_test(b, a);
  CHECK(rev.p_two_sided == r.p_two_sided);
  CHECK(rev.statistic == -r.statistic);

  const std::vector<double> z{0, 0, 0}, o{1, 1, 1};
  auto d = welch_t_test(z, o);
  CHECK(d.p_two_sided == 0.0);
  CHECK_FALSE(d.warnings.empty());
  auto eq = welch_t_test(o, o);
  CHECK(eq.p_two_sided == 1.0);
  CHECK(eq.warnings.front().find("degenerate") != std::string::npos);

  CHECK_THROWS_AS(welch_t_test(std::vector<double>{1}, b), InvalidArgument);
}

TEST_CASE("mann-whitney u") {
  std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto same = mann_whitney_u(a, a);
  CHECK(same.effect.value == 0.0);
  CHECK(same.p_two_sided >= 0.99);

  std::vector<double> hi(10);
  std::iota(hi.begin(), hi.end(), 11.0);
  auto sep = mann_whitney_u(a, hi);
  CHECK(sep.effect.value == -1.0);
  CHECK(sep.statistic == 0.0);
  CHECK(mann_whitney_u(hi, a).effect.value == 1.0);

  std::vector<double> c(5, 2.0);
  auto flat = mann_whitney_u(c, c);
  CHECK(flat.p_two_sided == 1.0);
  CHECK(flat.effect.value == 0.0);

  Rng rng(7);
  std::vector<double> x(15), y(15);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal() + 0.6;
  const auto r = mann_whitney_u(x, y);
  const double oracle = permutation_test(x, y, PermutationStatistic::u_statistic, 200000, 3);
  CHECK(std::fabs(r.p_two_sided - oracle) < 0.02);

  CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5}), InvalidArgument);
}

TEST_CASE("chi-square independence") {
  auto flat = chi_square_independence({{10, 10}, {10, 10}});
  CHECK(flat.statistic == 0.0);
  CHECK(flat.p_two_sided == doctest::Approx(1.0));
  CHECK(flat.effect.value == 0.0);

  // expected counts are all 30, each cell deviates by 20
  auto strong = chi_square_independence({{50, 10}, {10, 50}});
  CHECK(strong.statistic == doctest::Approx(4 * 400.0 / 30.0));
  CHECK(strong.p_two_sided < 1e-12);
  CHECK(strong.effect.value == doctest::Approx(std::sqrt(53.333333333333 / 120.0)));

  auto wide = chi_square_independence({{10, 12, 9}, {8, 15, 20}});
  CHECK(wide.degrees_of_freedom.value() == 2.0);

  CHECK_THROWS_WITH_AS(chi_square_independence({{0, 0}, {3, 4}}), doctest::Contains("degenerate margin"),
                       InvalidArgument);
  auto small = chi_square_independence({{1, 4}, {3, 2}});
  CHECK_FALSE(small.warnings.empty());
}

TEST_CASE("two-proportion z") {
  auto even = two_proportion_z(50, 100, 50, 100);
  CHECK(even.statistic == 0.0);
  CHECK(even.p_two_sided == 1.0);
  CHECK(even.find_effect(EffectKind::relative_risk)->value == 1.0);
  CHECK(even.effect.kind == EffectKind::odds_ratio);

  auto ab = two_proportion_z(15100, 200000, 3400, 200000);
  CHECK(ab.find_effect(EffectKind::relative_risk)->value == doctest::Approx(4.441).epsilon(1e-3));
  CHECK(ab.p_two_sided < 1e-6);
  // z^2 equals the Pearson statistic on the same 2x2 table
  auto chi = chi_square_independence({{15100, 200000 - 15100}, {3400, 200000 - 3400}});
  CHECK(ab.statistic * ab.statistic == doctest::Approx(chi.statistic).epsilon(1e-9));

  auto rr = two_proportion_z(995, 5000, 4750, 50000);
  CHECK(rr.find_effect(EffectKind::relative_risk)->value == doctest::Approx(2.0947).epsilon(1e-3));

  auto zero = two_proportion_z(5, 100, 0, 100);
  CHECK(std::isinf(zero.find_effect(EffectKind::relative_risk)->value));
  CHECK_FALSE(zero.warnings.empty());
  CHECK(zero.effect.value > 0.0);
}

TEST_CASE("logistic regression on a 2x2 table recovers the log odds ratio") {
  // x=1: 40 positive, 60 negative; x=0: 20 positive, 80 negative
  DesignMatrix x{{"x"}, {{}}};
  std::vector<double> y;
  auto add = [&](double xv, double yv, int count) {
    for (int i = 0; i < count; ++i) {
      x.columns[0].push_back(xv);
      y.push_back(yv);
    }
  };
  add(1, 1, 40);
  add(1, 0, 60);
  add(0, 1, 20);
  add(0, 0, 80);
  auto fit = logistic_regression(x, y);
  REQUIRE(fit.converged);
  CHECK(fit.coefficients[0].name == "(intercept)");
  CHECK(std::fabs(fit.find("x")->beta - std::log(40.0 * 80.0 / (60.0 * 20.0))) < 1e-6);
  CHECK(std::fabs(fit.coefficients[0].beta - std::log(20.0 / 80.0)) < 1e-6);
  CHECK(fit.iterations <= 25);
  // Woolf standard error equals the inverse-information standard error here
  CHECK(fit.find("x")->std_err == doctest::Approx(std::sqrt(1 / 40.0 + 1 / 60.0 + 1 / 20.0 + 1 / 80.0)));
  for (const auto& c : fit.coefficients) CHECK(std::fabs(c.p - normal_two_sided_p(c.wald_z)) < 1e-9);
}

TEST_CASE("logistic regression is calibrated under the null") {
  int not_significant = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng rng(500 + static_cast<std::uint64_t>(rep));
    DesignMatrix x{{"noise"}, {std::vector<double>(1000)}};
    std::vector<double> y(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      x.columns[0][i] = rng.normal();
      y[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    auto fit = logistic_regression(x, y);
    if (fit.find("noise")->p > 0.05) ++not_significant;
  }
  CHECK(not_significant >= 90);
}

TEST_CASE("logistic regression flags separation and singularity") {
  DesignMatrix x{{"copy"}, {{0, 0, 0, 1, 1, 1, 0, 1}}};
  std::vector<double> y{0, 0, 0, 1, 1, 1, 0, 1};
  auto fit = logistic_regression(x, y);
  CHECK_FALSE(fit.converged);
  CHECK(std::find(fit.warnings.begin(), fit.warnings.end(), "separation") != fit.warnings.end());

  DesignMatrix dup{{"a", "b"}, {{1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6}}};
  std::vector<double> yy{0, 1, 0, 1, 1, 0};
  CHECK_THROWS_AS(logistic_regression(dup, yy), Error);
}

TEST_CASE("bonferroni threshold") {
  CHECK(bonferroni_threshold(0.05, 4) == 0.0125);
  CHECK(bonferroni_threshold(0.05, 1) == 0.05);
  CHECK(bonferroni_threshold(0.01, 20) == doctest::Approx(0.0005));
  for (std::size_t m = 1; m < 50; ++m) CHECK(bonferroni_threshold(0.05, m + 1) < bonferroni_threshold(0.05, m));
}

TEST_CASE("benjamini-hochberg matches the step-up definition") {
  CHECK(benjamini_hochberg(std::vector<double>{0.001, 0.8}, 0.05) == std::vector<bool>{true, false});
  CHECK(benjamini_hochberg(std::vector<double>(5, 1.0), 0.05) == std::vector<bool>(5, false));

  Rng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> p(20);
    for (auto& v : p) v = rng.bernoulli(0.3) ? rng.uniform() * 0.01 : rng.uniform();
    const auto mask = benjamini_hochberg(p, 0.1);
    // brute force: accept p_i iff some k has #{p_j <= p_(k)} ... i.e. p_i <= p_(k) with p_(k) <= k q / m
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
      bool accept = false;
      for (std::size_t k = 1; k <= sorted.size(); ++k) {
        if (sorted[k - 1] <= k * 0.1 / 20.0 && p[i] <= sorted[k - 1]) accept = true;
      }
      CHECK(mask[i] == accept);
    }
  }
}

TEST_CASE("permutation test") {
  std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, b(10);
  std::iota(b.begin(), b.end(), 11.0);
  CHECK(permutation_test(a, a, PermutationStatistic::mean_diff, 5000, 1) >= 0.99);
  CHECK(permutation_test(a, b, PermutationStatistic::mean_diff, 20000, 1) <= 2e-4);
  CHECK(permutation_test(a, b, PermutationStatistic::u_statistic, 20000, 5) ==
        permutation_test(a, b, PermutationStatistic::u_statistic, 20000, 5));
}

TEST_CASE("describe effect") {
  CHECK(describe_effect({EffectKind::odds_ratio, 2.13, {}, {}}) == Magnitude::large);
  CHECK(describe_effect({EffectKind::rank_biserial_r, 0.44, {}, {}}) == Magnitude::moderate);
  CHECK(describe_effect({EffectKind::odds_ratio, 1.0, {}, {}}) == Magnitude::small);
  CHECK(describe_effect({EffectKind::odds_ratio, 1.0 / 2.13, {}, {}}) == Magnitude::large);
  CHECK(describe_effect({EffectKind::odds_ratio, 1.5, {}, {}}) == Magnitude::moderate);
  CHECK(describe_effect({EffectKind::cramers_v, 0.1, {}, {}}) == Magnitude::small);
}
