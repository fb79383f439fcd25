#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypolab/common/jsonl.hpp"
#include "hypolab/lab/executor.hpp"
#include "hypolab/lab/plan.hpp"
#include "hypolab/stats/types.hpp"

namespace hypolab::agents {

struct GeneratorProposal {
  std::string hypothesis;
  std::string request;
  bool test_mode = true;
};

json to_json(const GeneratorProposal& p);
GeneratorProposal proposal_from_json(const json& j);

enum class Verdict { supported, unsupported, inconclusive };
std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

/// Numbers copied from one executed step: the anti-fabrication record.
struct HeadlineResult {
  std::size_t step = 0;
  std::string source;  // test name, or "logistic_regression:<term>"
  double p = 1.0;
  stats::EffectSize effect;
  std::size_t support_n = 0;
};

json to_json(const HeadlineResult& h);
HeadlineResult headline_from_json(const json& j);

/// Reads the headline out of an executed step. Tests use their primary
/// effect; regressions use the first feature term (odds ratio = exp(beta)).
/// Throws ParseError when the step carries no test or regression.
HeadlineResult headline_from_step(const lab::StepResult& step);

struct AnalysisReport {
  bool test_mode = true;
  std::string feature_construction;
  std::string statistical_test;
  std::string results;
  std::string robustness;
  std::string conclusion;
  Verdict verdict = Verdict::inconclusive;
  std::optional<HeadlineResult> headline;
  std::string refinement_guidance;
  std::vector<lab::FeatureSpec> feature_specs_used;
  lab::ExperimentPlan plan;               // steps that executed, in order
  std::vector<json> step_results;         // step_result_to_json per executed step
  std::vector<std::string> warnings;
  std::size_t turns = 0;

  std::optional<double> headline_p() const { return headline ? std::optional<double>(headline->p) : std::nullopt; }
  std::size_t support_n() const { return headline ? headline->support_n : 0; }
};

json to_json(const AnalysisReport& r);
AnalysisReport report_from_json(const json& j);

/// Short text used as "previous analysis" in the next Generator prompt.
std::string summarize_report(const AnalysisReport& r);

struct SessionEntry {
  std::string hypothesis;
  AnalysisReport report;
};

struct SessionMemory {
  std::vector<SessionEntry> entries;  // ordered by refinement index
};

}  // namespace hypolab::agents
