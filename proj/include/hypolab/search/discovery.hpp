#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hypolab/agents/experimenter.hpp"
#include "hypolab/data/dataset.hpp"
#include "hypolab/llm/gateway.hpp"
#include "hypolab/search/bank.hpp"

namespace hypolab::search {

inline constexpr int kLogVersion = 1;

/// Append-only line log of a discovery run. Every record carries "type" and
/// "v". An empty path keeps records in memory only.
class SessionLog {
 public:
  explicit SessionLog(std::filesystem::path path = {});
  void append(json record);
  const std::vector<json>& records() const { return records_; }
  const std::filesystem::path& path() const { return path_; }

  /// Outer iterations that reached an iteration_end record in an existing
  /// log file.
  static std::set<std::size_t> completed_iterations(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::vector<json> records_;
};

struct DiscoveryRoles {
  llm::Gateway* gateway = nullptr;
  std::string generator_model;
  std::string experimenter_model;
  std::string embedding_model;
  double generator_temperature = 0.7;
  double experimenter_temperature = 0.2;
  agents::ExperimenterLimits limits;
  lab::Budget budget;
  lab::LabelSource* labels = nullptr;
  /// Per-iteration sampling inputs (boosting weights, clustering embeddings).
  std::function<data::SamplingAux(const HypothesisBank&)> sampling_aux;
};

struct DiscoveryContext {
  std::string task_description;
  std::string dataset_name;                // shown to the agents; never a path
  std::set<std::size_t> skip_iterations;   // already completed (resume)
  /// Called after every finished iteration with the current bank.
  std::function<void(const HypothesisBank&)> on_iteration_end;
};

struct DiscoveryResult {
  HypothesisBank bank;
  std::size_t iterations_completed = 0;
  std::size_t iterations_failed = 0;
  std::size_t iterations_skipped = 0;
};

/// Two-phase search: per outer iteration, sample rows, seed and refine T
/// hypotheses with the Generator/Experimenter pair, accept at most one, and
/// prune the bank to capacity. A failing iteration is logged and skipped.
DiscoveryResult run_discovery(const data::Dataset& dataset, const SearchConfig& config, const DiscoveryRoles& roles,
                              HypothesisBank bank, const DiscoveryContext& context, SessionLog& log);

/// Markdown summary of a run: accepted hypotheses with p, effect and
/// magnitude, then per-iteration verdict history from the log.
std::string render_markdown_report(const HypothesisBank& bank, const std::vector<json>& log_records,
                                   const SearchConfig& config);

}  // namespace hypolab::search
