// Acceptance suite: one PASS/FAIL line per criterion. Oracles are computed
// here from first principles (exhaustive search, resampling, generator
// parameters) rather than through the library under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "hypolab/cli/cli.hpp"
#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/log.hpp"
#include "hypolab/common/rng.hpp"
#include "hypolab/eval/inference.hpp"
#include "hypolab/search/bank.hpp"
#include "hypolab/stats/hypothesis_tests.hpp"
#include "hypolab/stats/logistic.hpp"
#include "hypolab/stats/multiple_testing.hpp"
#include "support/synthetic.hpp"

using namespace hypolab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hypolab");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hypolab_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<json> report_records(const fs::path& log) {
  std::vector<json> out;
  for (auto& rec : read_jsonl(log)) {
    if (rec.value("type", "") == "report") out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------- C1

constexpr std::size_t kOracleIterations = 200000;

// Resampling oracle: random relabelling of the pooled sample, statistic
// recomputed from scratch. Returns the share of relabellings at least as
// extreme as observed; `mid_p` receives the variant counting ties half.
double relabel_p(std::vector<double> pooled, std::size_t n1, const std::function<double(const std::vector<double>&)>& stat,
                 std::uint64_t seed, double* mid_p = nullptr) {
  const double observed = stat(pooled);
  Rng rng(seed);
  std::size_t greater = 0, equal = 0;
  for (std::size_t it = 0; it < kOracleIterations; ++it) {
    // only the first n1 positions need a fresh uniform draw
    for (std::size_t i = 0; i < n1; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(pooled.size() - i));
      std::swap(pooled[i], pooled[j]);
    }
    const double s = stat(pooled);
    const double tol = 1e-12 * std::max(1.0, std::abs(observed));
    if (s > observed + tol) {
      ++greater;
    } else if (std::abs(s - observed) <= tol) {
      ++equal;
    }
  }
  if (mid_p) *mid_p = (static_cast<double>(greater) + 0.5 * static_cast<double>(equal)) / kOracleIterations;
  return static_cast<double>(greater + equal) / kOracleIterations;
}

struct OracleCase {
  double library_p = 0.0;
  double oracle_p = 0.0;
  double mid_p = 0.0;
};

OracleCase welch_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n1 = 8 + rng.index(33), n2 = 8 + rng.index(33);
  const double shift = rng.uniform();
  std::vector<double> a(n1), b(n2);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = shift + rng.normal();
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  auto stat = [n1](const std::vector<double>& v) {
    double m1 = 0, m2 = 0;
    const std::size_t n2 = v.size() - n1;
    for (std::size_t i = 0; i < v.size(); ++i) (i < n1 ? m1 : m2) += v[i];
    m1 /= n1;
    m2 /= n2;
    double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - (i < n1 ? m1 : m2);
      (i < n1 ? s1 : s2) += d * d;
    }
    return std::abs(m1 - m2) / std::sqrt(s1 / (n1 - 1) / n1 + s2 / (n2 - 1) / n2);
  };
  OracleCase c;
  c.library_p = stats::welch_t_test(a, b).p_two_sided;
  c.oracle_p = relabel_p(pooled, n1, stat, seed ^ 0x9e37u, &c.mid_p);
  return c;
}

OracleCase mann_whitney_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n1 = 8 + rng.index(33), n2 = 8 + rng.index(33);
  const double shift = rng.uniform();
  std::vector<double> a(n1), b(n2);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = shift + rng.normal();
  // rank-sum of the first group on pooled midranks
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    double below = 0, same = 0;
    for (double y : pooled) {
      below += y < pooled[i];
      same += y == pooled[i];
    }
    ranks[i] = below + (same + 1) / 2;
  }
  const double center = n1 * (pooled.size() + 1) / 2.0;
  auto stat = [n1, center](const std::vector<double>& r) {
    return std::abs(std::accumulate(r.begin(), r.begin() + static_cast<long>(n1), 0.0) - center);
  };
  OracleCase c;
  c.library_p = stats::mann_whitney_u(a, b).p_two_sided;
  c.oracle_p = relabel_p(ranks, n1, stat, seed ^ 0x9e37u, &c.mid_p);
  return c;
}

OracleCase chi_square_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n1 = 8 + rng.index(33), n2 = 8 + rng.index(33);
  const double d = rng.uniform();
  const double base[3] = {0.4, 0.35, 0.25};
  const double moved[3] = {0.4 - 0.2 * d, 0.35 + 0.1 * d, 0.25 + 0.1 * d};
  auto draw = [&](const double* p) {
    const double u = rng.uniform();
    return u < p[0] ? 0.0 : (u < p[0] + p[1] ? 1.0 : 2.0);
  };
  std::vector<double> pooled;
  for (std::size_t i = 0; i < n1; ++i) pooled.push_back(draw(base));
  for (std::size_t i = 0; i < n2; ++i) pooled.push_back(draw(moved));

  double totals[3] = {0, 0, 0};
  for (double v : pooled) totals[static_cast<int>(v)] += 1;
  const double n = static_cast<double>(pooled.size());
  auto stat = [&, n1](const std::vector<double>& v) {
    double first[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n1; ++i) first[static_cast<int>(v[i])] += 1;
    double chi = 0;
    for (int k = 0; k < 3; ++k) {
      if (totals[k] == 0) continue;
      const double e1 = totals[k] * n1 / n, e2 = totals[k] * (n - n1) / n;
      chi += (first[k] - e1) * (first[k] - e1) / e1 + (totals[k] - first[k] - e2) * (totals[k] - first[k] - e2) / e2;
    }
    return chi;
  };
  std::vector<std::vector<double>> table(2);
  for (int k = 0; k < 3; ++k) {
    if (totals[k] == 0) continue;
    double in_first = 0;
    for (std::size_t i = 0; i < n1; ++i) in_first += pooled[i] == k;
    table[0].push_back(in_first);
    table[1].push_back(totals[k] - in_first);
  }
  OracleCase c;
  c.library_p = stats::chi_square_independence(table).p_two_sided;
  c.oracle_p = relabel_p(pooled, n1, stat, seed ^ 0x9e37u, &c.mid_p);
  return c;
}

std::optional<OracleCase> two_proportion_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n1 = 8 + rng.index(33), n2 = 8 + rng.index(33);
  const double d = rng.uniform();
  std::vector<double> pooled;
  std::uint64_t x1 = 0, x2 = 0;
  for (std::size_t i = 0; i < n1; ++i) {
    pooled.push_back(rng.bernoulli(0.3));
    x1 += pooled.back() > 0;
  }
  for (std::size_t i = 0; i < n2; ++i) {
    pooled.push_back(rng.bernoulli(0.3 + 0.3 * d));
    x2 += pooled.back() > 0;
  }
  if (x1 + x2 == 0 || x1 + x2 == n1 + n2) return std::nullopt;
  // with the margins fixed, |p1 - p2| orders relabellings the same way |z| does
  auto stat = [n1](const std::vector<double>& v) {
    double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) (i < n1 ? s1 : s2) += v[i];
    return std::abs(s1 / n1 - s2 / (v.size() - n1));
  };
  OracleCase c;
  c.library_p = stats::two_proportion_z(x1, n1, x2, n2).p_two_sided;
  c.oracle_p = relabel_p(pooled, n1, stat, seed ^ 0x9e37u, &c.mid_p);
  return c;
}

Outcome c1_stats_oracles() {
  const auto t0 = Clock::now();
  struct Family {
    const char* name;
    std::vector<OracleCase> cases;
  };
  std::vector<Family> families{{"welch_t_test", {}}, {"mann_whitney_u", {}}, {"chi_square_independence", {}},
                               {"two_proportion_z", {}}};
  std::vector<std::thread> workers;
  for (std::size_t f = 0; f < families.size(); ++f) {
    workers.emplace_back([f, &families] {
      auto& cases = families[f].cases;
      for (std::uint64_t seed = 1; cases.size() < 20; ++seed) {
        switch (f) {
          case 0: cases.push_back(welch_case(seed)); break;
          case 1: cases.push_back(mann_whitney_case(seed)); break;
          case 2: cases.push_back(chi_square_case(seed)); break;
          default:
            if (auto c = two_proportion_case(seed)) cases.push_back(*c);
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  const double elapsed = seconds_since(t0);

  bool pass = elapsed < 60.0;
  std::string detail;
  for (const auto& fam : families) {
    std::size_t within = 0;
    double worst = 0, worst_mid = 0;
    for (const auto& c : fam.cases) {
      const double diff = std::abs(c.library_p - c.oracle_p);
      within += diff <= 0.02;
      worst = std::max(worst, diff);
      worst_mid = std::max(worst_mid, std::abs(c.library_p - c.mid_p));
    }
    pass = pass && within == fam.cases.size();
    detail += fmt::format("{} {}/{} within 0.02 (max |dp| {:.4f}; ties-half oracle {:.4f}); ", fam.name, within,
                          fam.cases.size(), worst, worst_mid);
  }
  return {pass, detail + fmt::format("{:.1f} s", elapsed)};
}

// ---------------------------------------------------------------- C2

Outcome c2_logistic_identity() {
  Rng rng(2024);
  double worst_slope = 0, worst_intercept = 0, worst_p = 0;
  for (int t = 0; t < 200; ++t) {
    // cells: a = x1 & y1, b = x1 & y0, c = x0 & y1, d = x0 & y0
    const double a = 1 + rng.index(60), b = 1 + rng.index(60), c = 1 + rng.index(60), d = 1 + rng.index(60);
    stats::DesignMatrix x{{"x"}, {{}}};
    std::vector<double> y;
    auto add = [&](double count, double xv, double yv) {
      for (int k = 0; k < count; ++k) {
        x.columns[0].push_back(xv);
        y.push_back(yv);
      }
    };
    add(a, 1, 1);
    add(b, 1, 0);
    add(c, 0, 1);
    add(d, 0, 0);
    const auto fit = stats::logistic_regression(x, y);
    const auto& icpt = fit.coefficients.at(0);
    const auto& slope = fit.coefficients.at(1);
    worst_slope = std::max(worst_slope, std::abs(slope.beta - std::log((a * d) / (b * c))));
    worst_intercept = std::max(worst_intercept, std::abs(icpt.beta - std::log(c / d)));
    for (const auto* coef : {&icpt, &slope}) {
      const double z = coef->beta / coef->std_err;
      worst_p = std::max(worst_p, std::abs(coef->p - std::erfc(std::abs(z) / std::sqrt(2.0))));
      worst_p = std::max(worst_p, std::abs(coef->wald_z - z));
    }
  }
  return {worst_slope < 1e-6 && worst_intercept < 1e-6 && worst_p < 1e-9,
          fmt::format("200 tables: max |slope - log OR| {:.2e}, max |intercept - log(c/d)| {:.2e}, max Wald p gap {:.2e}",
                      worst_slope, worst_intercept, worst_p)};
}

// ---------------------------------------------------------------- C3, C4

Outcome c3_ab_arithmetic() {
  const auto r = stats::two_proportion_z(15100, 200000, 3400, 200000);
  const auto* rr = r.find_effect(stats::EffectKind::relative_risk);
  if (!rr) return {false, "no relative risk reported"};
  const double uplift = (rr->value - 1.0) * 100.0;
  return {std::abs(rr->value - 4.44) <= 0.01 && std::lround(uplift) == 344 && r.p_two_sided < 1e-6,
          fmt::format("relative risk {:.4f}, uplift +{:.1f}%, p = {:.3g}", rr->value, uplift, r.p_two_sided)};
}

Outcome c4_bonferroni() {
  const double t = stats::bonferroni_threshold(0.05, 4);
  return {t == 0.0125, fmt::format("bonferroni_threshold(0.05, 4) = {}", t)};
}

// ---------------------------------------------------------------- C5, C9

struct PlantedFixture {
  fs::path dir, data, script;
};

PlantedFixture planted_fixture(const std::string& name) {
  PlantedFixture f{scratch(name), {}, {}};
  f.data = f.dir / "stays.csv";
  f.script = f.dir / "script.json";
  write_file(f.data, testing::planted_reviews_csv(2000, 11));
  write_file(f.script, testing::planted_script().dump(2));
  return f;
}

std::vector<std::string> planted_discover(const PlantedFixture& f, const fs::path& out, bool replay) {
  std::vector<std::string> args{"discover", "--dataset", f.data.string(), "--outcome", "booked_again", "--positive",
                                "yes", "--iterations", "1", "--refinements", "4", "--alpha", "0.05", "--seed", "7",
                                "--sampling", "random:5", "--out", out.string()};
  if (replay) {
    args.insert(args.end(), {"--transport", "replay", "--transcripts", (f.dir / "record" / "transcripts.jsonl").string()});
  } else {
    args.insert(args.end(), {"--transport", "record", "--script", f.script.string()});
  }
  return args;
}

Outcome c5_planted_signal() {
  const auto t0 = Clock::now();
  const auto f = planted_fixture("planted");
  // no credential in reach: nothing here may go to a hosted model
  unsetenv("HYPOLAB_API_KEY");
  const auto rec = run_cli(planted_discover(f, f.dir / "record", false));
  if (rec.code != 0) return {false, "recording run failed: " + rec.err};
  const auto rep = run_cli(planted_discover(f, f.dir / "replay", true));
  if (rep.code != 0) return {false, "replay run failed: " + rep.err};
  const double elapsed = seconds_since(t0);

  const double true_or = (0.4 / 0.6) / (0.2 / 0.8);
  const auto bank = search::load_bank(f.dir / "replay" / "bank.jsonl");
  if (bank.entries.size() != 1 || !bank.entries[0].report.headline) {
    return {false, fmt::format("bank holds {} entries", bank.entries.size())};
  }
  const auto& h = *bank.entries[0].report.headline;
  const bool planted = bank.entries[0].text.find("marvelous") != std::string::npos;
  const bool or_ok = h.effect.kind == stats::EffectKind::odds_ratio && std::abs(h.effect.value - true_or) <= 0.2 * true_or;
  return {planted && h.p < 0.0125 && or_ok && elapsed < 60.0,
          fmt::format("accepted '{}': p = {:.3g}, OR = {:.3f} (generator {:.3f}), {:.1f} s", bank.entries[0].id, h.p,
                      h.effect.value, true_or, elapsed)};
}

std::string edit_p(json& node, int& remaining) {
  // walks the record, rewriting the remaining-th numeric "p"
  if (node.is_object()) {
    for (auto& [key, value] : node.items()) {
      if (key == "p" && value.is_number()) {
        if (remaining-- == 0) {
          value = value.get<double>() * 1.5 + 1e-4;
          return key;
        }
      } else if (auto hit = edit_p(value, remaining); !hit.empty()) {
        return key + "/" + hit;
      }
    }
  } else if (node.is_array()) {
    for (std::size_t k = 0; k < node.size(); ++k) {
      if (auto hit = edit_p(node[k], remaining); !hit.empty()) return std::to_string(k) + "/" + hit;
    }
  }
  return "";
}

Outcome c9_replay_closure() {
  const auto f = planted_fixture("closure");
  unsetenv("HYPOLAB_API_KEY");
  if (run_cli(planted_discover(f, f.dir / "record", false)).code != 0) return {false, "recording run failed"};
  if (run_cli(planted_discover(f, f.dir / "replay", true)).code != 0) return {false, "replay run failed"};
  std::vector<std::string> differ;
  for (const char* name : {"bank.jsonl", "session.jsonl", "report.md"}) {
    if (read_file(f.dir / "record" / name) != read_file(f.dir / "replay" / name)) differ.push_back(name);
  }
  const auto log = f.dir / "record" / "session.jsonl";
  const auto clean = run_cli({"replay", log.string()});

  // every p value inside every report record, edited one at a time
  const auto records = read_jsonl(log);
  std::size_t edits = 0, caught = 0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].value("type", "") != "report") continue;
    for (int which = 0;; ++which) {
      auto copy = records;
      int remaining = which;
      if (edit_p(copy[r], remaining).empty()) break;
      std::string text;
      for (const auto& rec : copy) text += rec.dump() + "\n";
      write_file(log, text);
      ++edits;
      caught += run_cli({"replay", log.string()}).code == 1;
    }
  }
  std::string restored;
  for (const auto& rec : records) restored += rec.dump() + "\n";
  write_file(log, restored);

  return {differ.empty() && clean.code == 0 && edits > 0 && caught == edits,
          fmt::format("bank/session/report identical: {}; clean audit exit {}; {} of {} single-p edits exit 1",
                      differ.empty() ? "yes" : "no (" + fmt::to_string(fmt::join(differ, ", ")) + ")", clean.code,
                      caught, edits)};
}

// ---------------------------------------------------------------- C6

Outcome c6_planted_confound() {
  const auto dir = scratch("confound");
  write_file(dir / "speeches.csv", testing::confounded_speeches_csv());
  write_file(dir / "script.json", testing::confound_script().dump(2));
  unsetenv("HYPOLAB_API_KEY");
  const auto r = run_cli({"discover", "--dataset", (dir / "speeches.csv").string(), "--outcome", "vote", "--positive",
                          "yes", "--iterations", "1", "--refinements", "4", "--seed", "3", "--test_fraction", "0",
                          "--transport", "record", "--script", (dir / "script.json").string(), "--out",
                          (dir / "out").string()});
  if (r.code != 0) return {false, "discovery run failed: " + r.err};

  std::optional<double> raw_p, controlled_p;
  std::string verdict;
  for (const auto& rec : report_records(dir / "out" / "session.jsonl")) {
    const auto& rep = rec.at("report");
    for (const auto& step : rep.at("step_results")) {
      if (!rep.at("test_mode").get<bool>() && step.contains("test")) raw_p = step["test"]["p"].get<double>();
      if (rep.at("test_mode").get<bool>() && step.contains("regression")) {
        for (const auto& c : step["regression"]["coefficients"]) {
          if (c.at("name") == "tax_relief") controlled_p = c.at("p").get<double>();
        }
        verdict = rep.at("verdict").get<std::string>();
      }
    }
  }
  const auto bank = search::load_bank(dir / "out" / "bank.jsonl");
  const bool ok = raw_p && *raw_p < 0.05 && controlled_p && *controlled_p > 0.05 && verdict == "unsupported" &&
                  bank.entries.empty();
  return {ok, fmt::format("raw phrase p = {}, with party control p = {}, verdict {}, bank size {}",
                          raw_p ? fmt::format("{:.3g}", *raw_p) : "missing",
                          controlled_p ? fmt::format("{:.3g}", *controlled_p) : "missing",
                          verdict.empty() ? "missing" : verdict, bank.entries.size())};
}

// ---------------------------------------------------------------- C7

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return 1.0 - dot / std::sqrt(na * nb);
}

double min_pairwise(const std::vector<std::vector<double>>& pts) {
  double best = 2.0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) best = std::min(best, cosine_distance(pts[a], pts[b]));
  }
  return best;
}

Outcome c7_dispersion() {
  Rng rng(77);
  std::size_t ok = 0;
  double worst = 1.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 3 + rng.index(8);                    // 3..10 vectors
    const std::size_t k = 2 + rng.index(std::min<std::size_t>(4, n - 2));  // 2..min(5, n - 1)
    std::vector<std::vector<double>> pts(n, std::vector<double>(64));
    for (auto& v : pts) {
      double ss = 0;
      for (auto& x : v) {
        x = rng.normal();
        ss += x * x;
      }
      for (auto& x : v) x /= std::sqrt(ss);
    }
    search::HypothesisBank bank;
    bank.capacity = k;
    for (std::size_t i = 0; i < n; ++i) {
      search::HypothesisRecord e;
      e.id = search::record_id(i + 1, 1);
      e.text = fmt::format("hypothesis {}", i);
      e.accepted = true;
      e.accepted_order = i + 1;
      e.embedding = pts[i];
      bank.entries.push_back(e);
    }
    std::vector<std::vector<double>> kept;
    for (const auto& e : search::prune_bank(bank).entries) kept.push_back(e.embedding);

    double best = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
      std::vector<std::vector<double>> subset;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) subset.push_back(pts[i]);
      }
      best = std::max(best, min_pairwise(subset));
    }
    const double got = kept.size() == k ? min_pairwise(kept) : 0.0;
    worst = std::min(worst, got / best);
    ok += got >= 0.5 * best - 1e-12;
  }
  return {ok == 100, fmt::format("{} of 100 instances within half of the optimum (worst ratio {:.3f}, 64-dim)", ok,
                                 worst)};
}

// ---------------------------------------------------------------- C8

Outcome c8_null_calibration() {
  constexpr std::size_t n = 2000;
  std::size_t null_zero = 0, planted_exact = 0;
  for (std::uint64_t rep = 1; rep <= 100; ++rep) {
    for (bool planted : {false, true}) {
      Rng rng(derive_seed(rep, planted ? 2 : 1));
      eval::FeatureMatrix m;
      m.rows = n;
      // five binary and five continuous features
      for (int c = 0; c < 10; ++c) {
        m.names.push_back(fmt::format("f{}", c));
        m.hypothesis_ids.push_back(fmt::format("h{}", c));
        m.binary.push_back(c < 5);
        std::vector<double> col(n);
        for (auto& v : col) v = c < 5 ? static_cast<double>(rng.bernoulli(0.2 + 0.1 * c)) : rng.normal();
        m.columns.push_back(std::move(col));
      }
      // planted: f3 moves the log-odds by 0.6
      std::vector<double> y(n);
      for (std::size_t r = 0; r < n; ++r) {
        const double eta = planted ? -0.3 + 0.6 * m.columns[3][r] : 0.0;
        y[r] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta)));
      }
      const auto s = eval::count_significant(m, y);
      if (!planted) {
        null_zero += s.count == 0;
      } else {
        bool exact = s.count == 1;
        for (const auto& c : s.columns) exact = exact && (c.significant == (c.name == "f3"));
        planted_exact += exact;
      }
    }
  }
  return {null_zero >= 95 && planted_exact >= 90,
          fmt::format("null: 0 significant in {}/100; planted: exactly f3 in {}/100", null_zero, planted_exact)};
}

// ---------------------------------------------------------------- C10

Outcome c10_digest_golden() {
  const std::string fixture = std::string(HYPOLAB_FIXTURES) + "/reviews.csv";
  const auto r = run_cli({"digest", "--dataset", fixture, "--seed", "1"});
  if (r.code != 0) return {false, "digest failed: " + r.err};
  const bool golden = r.out == read_file(fs::path(HYPOLAB_GOLDEN) / "digest_reviews.txt");

  // rating and nights are the 4th and 3rd fields from the right; quoting only
  // ever affects the review text further left
  std::vector<double> rating, nights;
  std::istringstream in(read_file(fixture));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    // a quoted review may span physical lines
    std::string next;
    while (std::count(line.begin(), line.end(), '"') % 2 == 1 && std::getline(in, next)) line += "\n" + next;
    std::vector<std::string> tail;
    std::size_t end = line.size();
    for (int k = 0; k < 4; ++k) {
      const auto comma = line.rfind(',', end - 1);
      tail.push_back(line.substr(comma + 1, end - comma - 1));
      end = comma;
    }
    if (!tail[3].empty()) rating.push_back(std::stod(tail[3]));
    nights.push_back(std::stod(tail[2]));
  }
  auto mean_sd = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / (v.size() - 1))};
  };
  const auto [rm, rs] = mean_sd(rating);
  const auto [nm, ns] = mean_sd(nights);
  const bool stats_ok = r.out.find(fmt::format("{:<5}{:>8.2f}{:>8.2f}", "mean", rm, nm)) != std::string::npos &&
                        r.out.find(fmt::format("{:<5}{:>8.2f}{:>8.2f}", "std", rs, ns)) != std::string::npos;

  // sample rows: review cells are at most 100 characters, long ones end in ".."
  bool cut_ok = true;
  std::size_t cut = 0;
  std::istringstream rows(r.out.substr(r.out.find("Random Sample Rows:")));
  while (std::getline(rows, line)) {
    if (line.rfind("|", 0) != 0 || line.rfind("|---", 0) == 0) continue;
    const auto cell = line.substr(1, line.find('|', 1) - 1);
    cut_ok = cut_ok && cell.size() == 100;
    if (cell.size() >= 2 && cell.substr(98) == "..") ++cut;
  }
  return {golden && stats_ok && cut_ok && cut > 0,
          fmt::format("byte-identical to golden: {}; rating mean/std {:.2f}/{:.2f} and nights {:.2f}/{:.2f} match: "
                      "{}; {} truncated review cells",
                      golden ? "yes" : "no", rm, rs, nm, ns, stats_ok ? "yes" : "no", cut)};
}

}  // namespace

int main() {
  set_log_sink(nullptr);
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"C1 stats oracle suite", c1_stats_oracles},
      {"C2 logistic identity on 2x2 tables", c2_logistic_identity},
      {"C3 A/B arithmetic", c3_ab_arithmetic},
      {"C4 Bonferroni threshold", c4_bonferroni},
      {"C5 planted signal end to end", c5_planted_signal},
      {"C6 planted confound end to end", c6_planted_confound},
      {"C7 greedy dispersion", c7_dispersion},
      {"C8 null calibration", c8_null_calibration},
      {"C9 replay closure", c9_replay_closure},
      {"C10 digest golden file", c10_digest_golden},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", std::size(criteria) - failed, std::size(criteria)) << std::endl;
  return failed == 0 ? 0 : 1;
}
