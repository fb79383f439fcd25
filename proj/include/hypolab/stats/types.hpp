#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypolab/common/jsonl.hpp"

namespace hypolab::stats {

enum class EffectKind { cohens_d, rank_biserial_r, odds_ratio, relative_risk, cramers_v, pearson_r };

std::string_view to_string(EffectKind kind);
EffectKind effect_kind_from_string(std::string_view name);

struct EffectSize {
  EffectKind kind = EffectKind::cohens_d;
  double value = 0.0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;

  friend bool operator==(const EffectSize&, const EffectSize&) = default;
};

struct TestResult {
  std::string test_name;
  double statistic = 0.0;
  std::optional<double> degrees_of_freedom;
  double p_two_sided = 1.0;
  EffectSize effect;
  // Further effect measures reported alongside the primary one
  // (two_proportion_z carries relative risk here).
  std::vector<EffectSize> extra_effects;
  std::vector<std::size_t> group_sizes;
  std::vector<std::string> warnings;

  std::size_t total_n() const;
  const EffectSize* find_effect(EffectKind kind) const;
};

struct Coefficient {
  std::string name;
  double beta = 0.0;
  double std_err = 0.0;
  double wald_z = 0.0;
  double p = 1.0;
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;  // intercept first
  std::size_t n = 0;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<std::string> warnings;

  const Coefficient* find(std::string_view name) const;
};

void to_json(json& j, const EffectSize& e);
void from_json(const json& j, EffectSize& e);
void to_json(json& j, const TestResult& r);
void from_json(const json& j, TestResult& r);
void to_json(json& j, const Coefficient& c);
void from_json(const json& j, Coefficient& c);
void to_json(json& j, const RegressionResult& r);
void from_json(const json& j, RegressionResult& r);

}  // namespace hypolab::stats
