#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypolab/agents/generator.hpp"
#include "hypolab/agents/prompts.hpp"
#include "hypolab/agents/report.hpp"
#include "hypolab/data/dataset.hpp"
#include "hypolab/lab/executor.hpp"
#include "hypolab/llm/gateway.hpp"

namespace hypolab::agents {

struct ExperimenterLimits {
  std::size_t max_turns = 12;
  std::size_t max_consecutive_failures = 3;
};

struct ExperimenterSetup {
  std::string model;
  double temperature = 0.2;
  ExperimenterLimits limits;
  lab::Budget budget;
  lab::LabelSource* labels = nullptr;  // llm featurize steps
};

/// Contents of the first ```plan block (or a ```json block holding an array
/// of step objects); nullopt when the reply has none.
std::optional<std::string> extract_plan_block(std::string_view response);

/// True when the reply carries a Verdict line or at least two report
/// section headings.
bool looks_like_report(std::string_view response);

/// Reads the report sections, verdict and headline step. Headline numbers
/// are copied from `history`, never from the text. Throws ParseError when
/// the designated step is missing or has no test/regression, or when a
/// testing-mode report claims support without any headline.
AnalysisReport parse_report(std::string_view response, const std::vector<lab::StepResult>& history,
                            bool test_mode = true);

/// Multi-turn Experimenter session. Each reply either submits plan steps
/// (run at once, results returned as a tool message) or gives the report.
/// Gateway errors propagate.
AnalysisReport run_experimenter(const ExperimenterInput& input, const data::Dataset& dataset,
                                llm::Gateway& gateway, const ExperimenterSetup& setup,
                                const ExchangeObserver& observer = {});

}  // namespace hypolab::agents
