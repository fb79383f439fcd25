#include "hypolab/agents/report.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hypolab/common/error.hpp"
#include "hypolab/common/text.hpp"
#include "hypolab/data/dataset.hpp"
#include "hypolab/stats/effect.hpp"

namespace hypolab::agents {

json to_json(const GeneratorProposal& p) {
  return json{{"hypothesis", p.hypothesis}, {"request", p.request}, {"test", p.test_mode}};
}

GeneratorProposal proposal_from_json(const json& j) {
  return {j.at("hypothesis").get<std::string>(), j.at("request").get<std::string>(), j.at("test").get<bool>()};
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::supported: return "supported";
    case Verdict::unsupported: return "unsupported";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict verdict_from_string(std::string_view s) {
  const auto t = text::to_lower(text::trim(s));
  if (t == "supported") return Verdict::supported;
  if (t == "unsupported") return Verdict::unsupported;
  if (t == "inconclusive") return Verdict::inconclusive;
  throw ParseError(fmt::format("unknown verdict '{}'", s));
}

json to_json(const HeadlineResult& h) {
  return json{{"step", h.step}, {"source", h.source}, {"p", h.p}, {"effect", h.effect}, {"support_n", h.support_n}};
}

HeadlineResult headline_from_json(const json& j) {
  HeadlineResult h;
  h.step = j.at("step").get<std::size_t>();
  h.source = j.at("source").get<std::string>();
  h.p = j.at("p").get<double>();
  h.effect = j.at("effect").get<stats::EffectSize>();
  h.support_n = j.at("support_n").get<std::size_t>();
  return h;
}

HeadlineResult headline_from_step(const lab::StepResult& step) {
  HeadlineResult h;
  h.step = step.number;
  if (step.test) {
    h.source = step.test->test_name;
    h.p = step.test->p_two_sided;
    h.effect = step.test->effect;
    h.support_n = step.test->total_n();
    return h;
  }
  if (step.regression) {
    const auto& coefs = step.regression->coefficients;
    if (coefs.size() < 2) throw ParseError(fmt::format("step {} regression has no feature term", step.number));
    const auto& c = coefs[1];  // [0] is the intercept
    h.source = "logistic_regression:" + c.name;
    h.p = c.p;
    h.effect = {stats::EffectKind::odds_ratio, std::exp(c.beta), std::exp(c.beta - 1.959963984540054 * c.std_err),
                std::exp(c.beta + 1.959963984540054 * c.std_err)};
    h.support_n = step.regression->n;
    return h;
  }
  throw ParseError(fmt::format("step {} has no test or regression result", step.number));
}

json to_json(const AnalysisReport& r) {
  json specs = json::array();
  for (const auto& s : r.feature_specs_used) specs.push_back(lab::to_json(s));
  json j{{"test_mode", r.test_mode},
         {"feature_construction", r.feature_construction},
         {"statistical_test", r.statistical_test},
         {"results", r.results},
         {"robustness", r.robustness},
         {"conclusion", r.conclusion},
         {"verdict", to_string(r.verdict)},
         {"refinement_guidance", r.refinement_guidance},
         {"feature_specs_used", specs},
         {"plan", lab::plan_to_json(r.plan)},
         {"step_results", r.step_results},
         {"warnings", r.warnings},
         {"turns", r.turns}};
  j["headline"] = r.headline ? to_json(*r.headline) : json(nullptr);
  return j;
}

AnalysisReport report_from_json(const json& j) {
  AnalysisReport r;
  r.test_mode = j.value("test_mode", true);
  r.feature_construction = j.value("feature_construction", "");
  r.statistical_test = j.value("statistical_test", "");
  r.results = j.value("results", "");
  r.robustness = j.value("robustness", "");
  r.conclusion = j.value("conclusion", "");
  r.verdict = verdict_from_string(j.value("verdict", "inconclusive"));
  r.refinement_guidance = j.value("refinement_guidance", "");
  if (j.contains("feature_specs_used")) {
    for (const auto& s : j.at("feature_specs_used")) r.feature_specs_used.push_back(lab::feature_spec_from_json(s));
  }
  if (j.contains("plan")) r.plan = lab::plan_from_json(j.at("plan"));
  if (j.contains("step_results")) r.step_results = j.at("step_results").get<std::vector<json>>();
  if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.turns = j.value("turns", std::size_t{0});
  if (j.contains("headline") && !j.at("headline").is_null()) r.headline = headline_from_json(j.at("headline"));
  return r;
}

std::string summarize_report(const AnalysisReport& r) {
  std::string out = fmt::format("Mode: {}\nVerdict: {}\n", r.test_mode ? "statistical testing" : "exploratory",
                                to_string(r.verdict));
  if (r.headline) {
    const auto& h = *r.headline;
    std::string ci;
    if (h.effect.ci_low && h.effect.ci_high) {
      ci = fmt::format(" [{}, {}]", data::format_number(*h.effect.ci_low), data::format_number(*h.effect.ci_high));
    }
    out += fmt::format("Headline (step {}, {}): p = {}, {} = {}{} ({}), n = {}\n", h.step, h.source,
                       data::format_number(h.p), stats::to_string(h.effect.kind), data::format_number(h.effect.value),
                       ci, stats::to_string(stats::describe_effect(h.effect)), h.support_n);
  }
  auto section = [&](const char* title, const std::string& body) {
    if (!text::trim(body).empty()) out += fmt::format("{}: {}\n", title, text::trim(body));
  };
  section("Feature Construction", r.feature_construction);
  section("Statistical Test", r.statistical_test);
  section("Robustness", r.robustness);
  section("Conclusion", r.conclusion);
  for (const auto& w : r.warnings) out += "Warning: " + w + "\n";
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

}  // namespace hypolab::agents
