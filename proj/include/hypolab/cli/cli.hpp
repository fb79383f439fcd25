#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypolab/data/dataset.hpp"
#include "hypolab/data/load.hpp"
#include "hypolab/llm/gateway.hpp"
#include "hypolab/search/bank.hpp"

namespace hypolab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // audit mismatch or a run that produced nothing
inline constexpr int kExitUsage = 2;    // bad flags, config, data or credentials

/// Everything a run needs. Every field has a config-file key and a flag of
/// the same name; the API key is only ever read from the environment.
struct RunConfig {
  std::filesystem::path dataset;
  std::string format;                         // "", "delimited" or "records"
  std::vector<std::string> kind;              // "column=kind" overrides
  std::string outcome;
  std::string positive;                       // outcome level coded 1
  std::string task;
  std::filesystem::path task_file;
  std::vector<std::string> labels;            // defaults to the outcome levels
  search::SearchConfig search;
  std::string sampling = "random:5";
  double test_fraction = 0.2;
  std::string generator_model = "gpt-4o";
  std::string experimenter_model = "gpt-4o";
  std::string annotator_model = "gpt-4o";
  std::string embedding_model = "text-embedding-3-large";
  double generator_temperature = 0.7;
  double experimenter_temperature = 0.2;
  std::size_t max_turns = 12;
  std::size_t max_in_flight = 8;
  std::string transport = "live";
  std::filesystem::path out = "hypolab-out";
  std::filesystem::path transcripts;          // defaults to <out>/transcripts.jsonl
  std::filesystem::path script;               // scripted provider instead of HTTP

  std::filesystem::path transcript_path() const;
  std::string task_description() const;
  data::LoadOptions load_options() const;
};

/// Checks paths and values; throws InvalidArgument naming the problem.
void validate(RunConfig& config);

/// Loads the dataset and sets the outcome column (InvalidArgument when it
/// is missing).
data::Dataset load_dataset(const RunConfig& config);

/// (train, held-out) split used by every command; test_fraction 0 keeps
/// everything for training.
std::pair<data::Dataset, data::Dataset> split(const data::Dataset& dataset, const RunConfig& config);

/// Gateway for the configured transport. Live and record use the scripted
/// provider when `script` is set, otherwise HTTP with credentials from the
/// environment (GatewayError::authentication when absent).
std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& config);

/// run.json written next to the session log: enough to reload the data.
json run_manifest(const RunConfig& config);
RunConfig config_from_manifest(const json& manifest);

int cmd_discover(RunConfig config, std::ostream& out, std::ostream& err);

struct InferOptions {
  std::filesystem::path bank;   // defaults to <out>/bank.jsonl
  std::filesystem::path test;   // defaults to the held-out split
  std::string method = "regression";
  std::size_t k = 3;
};
int cmd_infer(RunConfig config, const InferOptions& options, std::ostream& out, std::ostream& err);

int cmd_evaluate(RunConfig config, std::filesystem::path bank, std::ostream& out, std::ostream& err);

int cmd_digest(RunConfig config, std::ostream& out, std::ostream& err);

/// Re-executes every logged plan and compares each step record and headline
/// with the recomputation. `dataset` overrides the one named in run.json.
int cmd_replay(const std::filesystem::path& session_log, const std::filesystem::path& dataset, std::ostream& out,
               std::ostream& err);

/// Parses a command line (args[0] is the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hypolab::cli
