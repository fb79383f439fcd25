#include <fmt/format.h>

#include "hypolab/cli/cli.hpp"
#include "hypolab/common/error.hpp"
#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/text.hpp"
#include "hypolab/data/sampling.hpp"
#include "hypolab/llm/provider.hpp"

namespace hypolab::cli {

namespace fs = std::filesystem;

fs::path RunConfig::transcript_path() const { return transcripts.empty() ? out / "transcripts.jsonl" : transcripts; }

std::string RunConfig::task_description() const {
  if (!task_file.empty()) return std::string(text::trim(read_file(task_file)));
  if (!task.empty()) return task;
  return fmt::format("You're a professional data analyst studying what predicts the '{}' column.", outcome);
}

data::LoadOptions RunConfig::load_options() const {
  data::LoadOptions o;
  if (format == "delimited") o.format = data::TableFormat::delimited;
  if (format == "records") o.format = data::TableFormat::records;
  for (const auto& k : kind) {
    const auto eq = k.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidArgument(fmt::format("--kind expects column=kind, got '{}'", k));
    }
    o.kind_overrides[k.substr(0, eq)] = data::column_kind_from_string(k.substr(eq + 1));
  }
  return o;
}

void validate(RunConfig& c) {
  if (c.dataset.empty()) throw InvalidArgument("no dataset given (--dataset)");
  if (!fs::exists(c.dataset)) throw InvalidArgument(fmt::format("dataset '{}' does not exist", c.dataset.string()));
  if (!c.task_file.empty() && !fs::exists(c.task_file)) {
    throw InvalidArgument(fmt::format("task file '{}' does not exist", c.task_file.string()));
  }
  if (!c.script.empty() && !fs::exists(c.script)) {
    throw InvalidArgument(fmt::format("script '{}' does not exist", c.script.string()));
  }
  if (!c.format.empty() && c.format != "delimited" && c.format != "records") {
    throw InvalidArgument(fmt::format("unknown format '{}' (delimited or records)", c.format));
  }
  if (c.test_fraction < 0.0 || c.test_fraction >= 1.0) {
    throw InvalidArgument(fmt::format("test_fraction must be in [0, 1), got {}", c.test_fraction));
  }
  if (c.max_turns == 0) throw InvalidArgument("max_turns must be positive");
  if (c.max_in_flight == 0) throw InvalidArgument("max_in_flight must be positive");
  c.search.sampling = data::SamplingStrategy::parse(c.sampling);
  search::validate(c.search);
  const auto mode = llm::transport_mode_from_string(c.transport);
  if (mode == llm::TransportMode::replay && !fs::exists(c.transcript_path())) {
    throw InvalidArgument(fmt::format("replay transport needs a transcript file; '{}' does not exist",
                                      c.transcript_path().string()));
  }
  c.load_options();
}

data::Dataset load_dataset(const RunConfig& config) {
  auto d = data::load_table(config.dataset, config.load_options());
  if (config.outcome.empty()) throw InvalidArgument("no outcome column given (--outcome)");
  if (!d.has_column(config.outcome)) {
    throw InvalidArgument(fmt::format("outcome column '{}' is not in {}", config.outcome,
                                      config.dataset.filename().string()));
  }
  d.set_outcome(config.outcome);
  return d;
}

std::pair<data::Dataset, data::Dataset> split(const data::Dataset& dataset, const RunConfig& config) {
  if (config.test_fraction == 0.0) return {dataset, dataset.select_rows({})};
  return data::holdout_split(dataset, config.test_fraction, config.search.rng_seed);
}

std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& config) {
  llm::GatewayConfig gc;
  gc.mode = llm::transport_mode_from_string(config.transport);
  gc.transcript_path = config.transcript_path();
  gc.max_in_flight = config.max_in_flight;
  std::shared_ptr<llm::Provider> provider;
  if (gc.mode != llm::TransportMode::replay) {
    if (!config.script.empty()) {
      json script;
      try {
        script = json::parse(read_file(config.script));
      } catch (const json::exception& e) {
        throw ParseError(fmt::format("{}: {}", config.script.string(), e.what()));
      }
      provider = std::make_shared<llm::ScriptedProvider>(script);
    } else {
      provider = std::make_shared<llm::HttpProvider>(llm::http_settings_from_environment());
    }
  }
  return std::make_unique<llm::Gateway>(gc, provider);
}

json run_manifest(const RunConfig& c) {
  return {{"run_version", 1},
          {"dataset", fs::absolute(c.dataset).lexically_normal().string()},
          {"format", c.format},
          {"kind", c.kind},
          {"outcome", c.outcome},
          {"positive", c.positive},
          {"test_fraction", c.test_fraction},
          {"seed", c.search.rng_seed},
          {"transport", c.transport},
          {"transcripts", fs::absolute(c.transcript_path()).lexically_normal().string()},
          {"annotator_model", c.annotator_model},
          {"max_turns", c.max_turns}};
}

RunConfig config_from_manifest(const json& m) {
  if (m.value("run_version", 0) != 1) throw ParseError("unsupported run manifest version");
  RunConfig c;
  c.dataset = m.at("dataset").get<std::string>();
  c.format = m.value("format", "");
  c.kind = m.value("kind", std::vector<std::string>{});
  c.outcome = m.at("outcome").get<std::string>();
  c.positive = m.value("positive", "");
  c.test_fraction = m.at("test_fraction").get<double>();
  c.search.rng_seed = m.at("seed").get<std::uint64_t>();
  c.transport = "replay";
  c.transcripts = m.value("transcripts", "");
  c.annotator_model = m.value("annotator_model", c.annotator_model);
  c.max_turns = m.value("max_turns", c.max_turns);
  return c;
}

}  // namespace hypolab::cli
