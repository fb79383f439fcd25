#include <algorithm>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hypolab/cli/cli.hpp"
#include "hypolab/common/error.hpp"

namespace hypolab::cli {

namespace {

void add_data_options(CLI::App& cmd, RunConfig& c) {
  cmd.add_option("--dataset", c.dataset, "Table file (.csv, .tsv, .jsonl)");
  cmd.add_option("--format", c.format, "delimited or records (default: from the extension)");
  cmd.add_option("--kind", c.kind, "Column kind override, e.g. stay_date=timestamp")->delimiter(',');
  cmd.add_option("--outcome", c.outcome, "Outcome column");
  cmd.add_option("--positive", c.positive, "Outcome level counted as positive");
  cmd.add_option("--seed", c.search.rng_seed, "Seed for sampling and the holdout split");
  cmd.add_option("--sampling", c.sampling, "random:k, boosting:k, clustering:k:clusters or none");
}

void add_run_options(CLI::App& cmd, RunConfig& c) {
  add_data_options(cmd, c);
  cmd.add_option("--task", c.task, "Task description given to the agents");
  cmd.add_option("--task_file", c.task_file, "File holding the task description");
  cmd.add_option("--labels", c.labels, "Label set for the task (default: outcome levels)")->delimiter(',');
  cmd.add_option("--iterations", c.search.outer_iterations, "Outer iterations (N)");
  cmd.add_option("--refinements", c.search.refinement_steps, "Refinement steps per iteration (T)");
  cmd.add_option("--capacity", c.search.bank_capacity, "Bank capacity (K)");
  cmd.add_option("--alpha", c.search.alpha, "Family-wise significance level");
  cmd.add_option("--novelty", c.search.novelty_clause, "Ask the Generator for hypotheses unlike the bank");
  cmd.add_option("--test_fraction", c.test_fraction, "Share of rows held out from discovery");
  cmd.add_option("--generator_model", c.generator_model, "Model behind the Generator");
  cmd.add_option("--experimenter_model", c.experimenter_model, "Model behind the Experimenter");
  cmd.add_option("--annotator_model", c.annotator_model, "Model used for annotated features");
  cmd.add_option("--embedding_model", c.embedding_model, "Model for hypothesis embeddings");
  cmd.add_option("--generator_temperature", c.generator_temperature, "Sampling temperature for the Generator");
  cmd.add_option("--experimenter_temperature", c.experimenter_temperature, "Sampling temperature for the Experimenter");
  cmd.add_option("--max_turns", c.max_turns, "Experimenter turns per hypothesis");
  cmd.add_option("--max_in_flight", c.max_in_flight, "Concurrent model requests");
  cmd.add_option("--transport", c.transport, "live, record or replay");
  cmd.add_option("--out", c.out, "Output directory");
  cmd.add_option("--transcripts", c.transcripts, "Transcript file (default: <out>/transcripts.jsonl)");
  cmd.add_option("--script", c.script, "Scripted responses instead of a hosted model");
}

// Flat key = value file; keys are flag names. Values given on the command
// line win.
void apply_config_file(CLI::App& cmd, const std::string& path, const std::set<std::string>& known_elsewhere) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::FileError& e) {
    throw InvalidArgument(fmt::format("cannot read config file '{}'", path));
  }
  for (const auto& item : items) {
    if (!item.parents.empty()) {
      throw InvalidArgument(fmt::format("config file '{}' must be flat; found section '{}'", path, item.parents.front()));
    }
    auto lower = item.name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (lower.find("api_key") != std::string::npos || lower.find("api-key") != std::string::npos ||
        lower == "token" || lower == "secret") {
      throw InvalidArgument(fmt::format("'{}' does not belong in a config file; set the HYPOLAB_API_KEY environment "
                                        "variable instead",
                                        item.name));
    }
    if (item.name == "config") continue;
    auto* opt = cmd.get_option_no_throw("--" + item.name);
    if (!opt) {
      if (known_elsewhere.count(item.name)) continue;
      throw InvalidArgument(fmt::format("unknown config key '{}' in {}", item.name, path));
    }
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hypothesis discovery over tabular data with language-model agents"};
  app.name(args.empty() ? "hypolab" : std::filesystem::path(args.front()).filename().string());
  app.require_subcommand(1);

  RunConfig discover_cfg, infer_cfg, evaluate_cfg, digest_cfg;
  std::string discover_file, infer_file, evaluate_file, digest_file;
  InferOptions infer_opts;
  std::filesystem::path evaluate_bank, replay_log, replay_dataset;

  auto* discover = app.add_subcommand("discover", "Search for hypotheses and write bank, session log and report");
  discover->add_option("--config", discover_file, "Flat key = value config file");
  add_run_options(*discover, discover_cfg);

  auto* infer = app.add_subcommand("infer", "Predict held-out labels from a hypothesis bank");
  infer->add_option("--config", infer_file, "Flat key = value config file");
  add_run_options(*infer, infer_cfg);
  infer->add_option("--bank", infer_opts.bank, "Bank file (default: <out>/bank.jsonl)");
  infer->add_option("--test", infer_opts.test, "Test table (default: the held-out split)");
  infer->add_option("--method", infer_opts.method, "regression or two_step")
      ->check(CLI::IsMember({"regression", "two_step"}));
  infer->add_option("--k", infer_opts.k, "Hypotheses selected per example (two_step)");

  auto* evaluate = app.add_subcommand("evaluate", "Count bank hypotheses that stay significant on held-out data");
  evaluate->add_option("--config", evaluate_file, "Flat key = value config file");
  add_run_options(*evaluate, evaluate_cfg);
  evaluate->add_option("--bank", evaluate_bank, "Bank file (default: <out>/bank.jsonl)");

  auto* digest = app.add_subcommand("digest", "Print the dataset digest shown to the agents");
  digest->add_option("--config", digest_file, "Flat key = value config file");
  add_data_options(*digest, digest_cfg);

  auto* replay = app.add_subcommand("replay", "Re-execute logged plans and check every reported number");
  replay->add_option("session_log", replay_log, "session.jsonl of a discovery run")->required();
  replay->add_option("--dataset", replay_dataset, "Dataset (default: the one recorded in run.json)");

  std::set<std::string> known;
  for (auto* cmd : {discover, infer, evaluate, digest}) {
    for (const auto* opt : cmd->get_options()) {
      for (const auto& name : opt->get_lnames()) known.insert(name);
    }
  }

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
    const std::pair<CLI::App*, std::string*> files[] = {
        {discover, &discover_file}, {infer, &infer_file}, {evaluate, &evaluate_file}, {digest, &digest_file}};
    for (const auto& [cmd, file] : files) {
      if (cmd->parsed() && !file->empty()) apply_config_file(*cmd, *file, known);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (discover->parsed()) return cmd_discover(discover_cfg, out, err);
    if (infer->parsed()) return cmd_infer(infer_cfg, infer_opts, out, err);
    if (evaluate->parsed()) return cmd_evaluate(evaluate_cfg, evaluate_bank, out, err);
    if (digest->parsed()) return cmd_digest(digest_cfg, out, err);
    if (replay->parsed()) return cmd_replay(replay_log, replay_dataset, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace hypolab::cli
