#include "hypolab/stats/types.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "hypolab/common/error.hpp"

namespace hypolab::stats {
namespace {

constexpr std::array<std::pair<EffectKind, std::string_view>, 6> kEffectNames{{
    {EffectKind::cohens_d, "cohens_d"},
    {EffectKind::rank_biserial_r, "rank_biserial_r"},
    {EffectKind::odds_ratio, "odds_ratio"},
    {EffectKind::relative_risk, "relative_risk"},
    {EffectKind::cramers_v, "cramers_v"},
    {EffectKind::pearson_r, "pearson_r"},
}};

// JSON has no infinity; +/-inf and NaN are written as strings.
json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

}  // namespace

std::string_view to_string(EffectKind kind) {
  for (const auto& [k, name] : kEffectNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

EffectKind effect_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kEffectNames) {
    if (n == name) return k;
  }
  throw ParseError("unknown effect kind: " + std::string(name));
}

std::size_t TestResult::total_n() const {
  return std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
}

const EffectSize* TestResult::find_effect(EffectKind kind) const {
  if (effect.kind == kind) return &effect;
  for (const auto& e : extra_effects) {
    if (e.kind == kind) return &e;
  }
  return nullptr;
}

const Coefficient* RegressionResult::find(std::string_view name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void to_json(json& j, const EffectSize& e) {
  j = json{{"kind", to_string(e.kind)}, {"value", number_to_json(e.value)}};
  if (e.ci_low) j["ci_low"] = number_to_json(*e.ci_low);
  if (e.ci_high) j["ci_high"] = number_to_json(*e.ci_high);
}

void from_json(const json& j, EffectSize& e) {
  e.kind = effect_kind_from_string(j.at("kind").get<std::string>());
  e.value = number_from_json(j.at("value"));
  e.ci_low = j.contains("ci_low") ? std::optional(number_from_json(j["ci_low"])) : std::nullopt;
  e.ci_high = j.contains("ci_high") ? std::optional(number_from_json(j["ci_high"])) : std::nullopt;
}

void to_json(json& j, const TestResult& r) {
  j = json{{"test", r.test_name},
           {"statistic", number_to_json(r.statistic)},
           {"p", number_to_json(r.p_two_sided)},
           {"effect", r.effect},
           {"group_sizes", r.group_sizes},
           {"warnings", r.warnings}};
  if (r.degrees_of_freedom) j["df"] = number_to_json(*r.degrees_of_freedom);
  if (!r.extra_effects.empty()) j["extra_effects"] = r.extra_effects;
}

void from_json(const json& j, TestResult& r) {
  r.test_name = j.at("test").get<std::string>();
  r.statistic = number_from_json(j.at("statistic"));
  r.p_two_sided = number_from_json(j.at("p"));
  r.effect = j.at("effect").get<EffectSize>();
  r.group_sizes = j.at("group_sizes").get<std::vector<std::size_t>>();
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.degrees_of_freedom = j.contains("df") ? std::optional(number_from_json(j["df"])) : std::nullopt;
  r.extra_effects = j.value("extra_effects", std::vector<EffectSize>{});
}

void to_json(json& j, const Coefficient& c) {
  j = json{{"name", c.name},
           {"beta", number_to_json(c.beta)},
           {"std_err", number_to_json(c.std_err)},
           {"z", number_to_json(c.wald_z)},
           {"p", number_to_json(c.p)}};
}

void from_json(const json& j, Coefficient& c) {
  c.name = j.at("name").get<std::string>();
  c.beta = number_from_json(j.at("beta"));
  c.std_err = number_from_json(j.at("std_err"));
  c.wald_z = number_from_json(j.at("z"));
  c.p = number_from_json(j.at("p"));
}

void to_json(json& j, const RegressionResult& r) {
  j = json{{"coefficients", r.coefficients},
           {"n", r.n},
           {"converged", r.converged},
           {"iterations", r.iterations},
           {"log_likelihood", number_to_json(r.log_likelihood)},
           {"warnings", r.warnings}};
}

void from_json(const json& j, RegressionResult& r) {
  r.coefficients = j.at("coefficients").get<std::vector<Coefficient>>();
  r.n = j.at("n").get<std::size_t>();
  r.converged = j.at("converged").get<bool>();
  r.iterations = j.at("iterations").get<int>();
  r.log_likelihood = number_from_json(j.at("log_likelihood"));
  r.warnings = j.value("warnings", std::vector<std::string>{});
}

}  // namespace hypolab::stats
