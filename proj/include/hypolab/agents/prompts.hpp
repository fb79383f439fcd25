#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypolab/agents/report.hpp"
#include "hypolab/llm/types.hpp"

namespace hypolab::agents {

inline constexpr int kPromptVersion = 1;

/// Outer iteration i of N and refinement step j of T, all 1-based.
struct IterationStatus {
  std::size_t i = 1, n = 1, j = 1, t = 1;
  std::size_t iteration() const { return (i - 1) * t + j; }
  std::size_t max_iterations() const { return n * t; }
};

struct GeneratorInput {
  std::string task_description;
  std::string data_description;  // rendered digest
  std::vector<std::string> bank;  // validated hypothesis texts
  std::vector<std::string> session_history;
  IterationStatus status;
  std::optional<std::string> current_hypothesis;
  std::optional<std::string> previous_analysis;
  bool novelty_clause = true;  // off drops the "novel relative to these" request
};

struct ExperimenterInput {
  std::string task_description;
  std::string dataset_name;
  std::string data_description;
  GeneratorProposal proposal;
};

std::string generator_system_prompt(const std::string& task_description);
std::string generator_user_prompt(const GeneratorInput& in);
llm::ChatExchange build_generator_prompt(const GeneratorInput& in, const std::string& model, double temperature = 0.7);

std::string experimenter_system_prompt(const std::string& task_description);
std::string experimenter_user_prompt(const ExperimenterInput& in);
llm::ChatExchange build_experimenter_prompt(const ExperimenterInput& in, const std::string& model,
                                            double temperature = 0.2);

/// Follow-up sent once when a Generator reply has no usable object.
std::string proposal_repair_message();

}  // namespace hypolab::agents
