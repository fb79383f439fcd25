#include <fstream>
#include <mutex>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "hypolab/annotate/annotator.hpp"
#include "hypolab/cli/cli.hpp"
#include "hypolab/common/error.hpp"
#include "hypolab/common/jsonl.hpp"
#include "hypolab/data/digest.hpp"
#include "hypolab/data/sampling.hpp"
#include "hypolab/eval/inference.hpp"
#include "hypolab/search/discovery.hpp"

namespace hypolab::cli {

namespace fs = std::filesystem;

namespace {

// Builds the gateway and annotator on first use, so commands whose bank has
// no llm features never need credentials or transcripts.
class LazyLabels : public lab::LabelSource {
 public:
  LazyLabels(RunConfig config, fs::path cache) : config_(std::move(config)), cache_(std::move(cache)) {}

  Result annotate(const lab::FeatureSpec& spec, const data::Dataset& dataset,
                  const std::vector<std::size_t>& rows) override {
    std::call_once(once_, [&] {
      gateway_ = make_gateway(config_);
      annotate::AnnotatorOptions o;
      o.model = config_.annotator_model;
      o.cache_path = cache_;
      o.image_root = config_.dataset.parent_path();
      o.concurrency = config_.max_in_flight;
      annotator_ = std::make_unique<annotate::Annotator>(*gateway_, o);
    });
    return annotator_->annotate(spec, dataset, rows);
  }

 private:
  RunConfig config_;
  fs::path cache_;
  std::once_flag once_;
  std::unique_ptr<llm::Gateway> gateway_;
  std::unique_ptr<annotate::Annotator> annotator_;
};

std::optional<std::string> positive_of(const RunConfig& c) {
  return c.positive.empty() ? std::nullopt : std::optional<std::string>(c.positive);
}

// Distinct non-null outcome values in sorted order.
std::vector<std::string> outcome_levels(const data::Dataset& d, const std::string& outcome) {
  const auto& col = d.column(outcome);
  std::set<std::string> levels;
  for (const auto& v : col.values) {
    if (!data::is_null(v)) levels.insert(data::render_cell(v, col.kind));
  }
  return {levels.begin(), levels.end()};
}

std::string row_text(const data::Dataset& d, std::size_t r) {
  std::string s;
  for (const auto& c : d.columns()) {
    if (c.identifier_like || (d.outcome_column() && c.name == *d.outcome_column())) continue;
    const auto cell = data::sample_cell(c.values[r], c.kind);
    if (cell.empty()) continue;
    if (!s.empty()) s += "; ";
    s += c.name + ": " + cell;
  }
  return s.empty() ? "(empty row)" : s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

int usage_error(std::ostream& err, const std::string& message) {
  err << "error: " << message << "\n";
  return kExitUsage;
}

search::HypothesisBank load_nonempty_bank(const fs::path& path) {
  if (!fs::exists(path)) throw InvalidArgument(fmt::format("bank file '{}' does not exist", path.string()));
  auto bank = search::load_bank(path);
  if (bank.entries.empty()) throw InvalidArgument(fmt::format("bank '{}' is empty", path.string()));
  return bank;
}

}  // namespace

int cmd_discover(RunConfig config, std::ostream& out, std::ostream& err) {
  data::Dataset train;
  std::unique_ptr<llm::Gateway> gateway;
  std::vector<double> labels01;
  try {
    validate(config);
    train = split(load_dataset(config), config).first;
    if (config.search.sampling.kind == data::SamplingStrategy::Kind::boosting) {
      labels01 = eval::binary_outcome(train, config.outcome, positive_of(config));
    }
    gateway = make_gateway(config);
  } catch (const Error& e) {
    return usage_error(err, e.what());
  }

  fs::create_directories(config.out);
  write_file(config.out / "run.json", run_manifest(config).dump(2) + "\n");
  const auto log_path = config.out / "session.jsonl";
  const auto bank_path = config.out / "bank.jsonl";
  const auto done = search::SessionLog::completed_iterations(log_path);
  search::HypothesisBank bank;
  if (!done.empty() && fs::exists(bank_path)) bank = search::load_bank(bank_path);
  if (!done.empty()) out << fmt::format("resuming: {} iteration(s) already finished\n", done.size());

  annotate::AnnotatorOptions ao;
  ao.model = config.annotator_model;
  ao.cache_path = config.out / "annotations.jsonl";
  ao.image_root = config.dataset.parent_path();
  ao.concurrency = config.max_in_flight;
  annotate::Annotator annotator(*gateway, ao);

  search::DiscoveryRoles roles;
  roles.gateway = gateway.get();
  roles.generator_model = config.generator_model;
  roles.experimenter_model = config.experimenter_model;
  roles.embedding_model = config.embedding_model;
  roles.generator_temperature = config.generator_temperature;
  roles.experimenter_temperature = config.experimenter_temperature;
  roles.limits.max_turns = config.max_turns;
  roles.labels = &annotator;
  std::optional<std::vector<std::vector<double>>> row_embeddings;
  if (config.search.sampling.kind == data::SamplingStrategy::Kind::boosting) {
    roles.sampling_aux = [&](const search::HypothesisBank& b) {
      data::SamplingAux aux;
      aux.weights = eval::boosting_weights(eval::featurize_by_bank(train, b, &annotator), labels01);
      return aux;
    };
  } else if (config.search.sampling.kind == data::SamplingStrategy::Kind::clustering) {
    roles.sampling_aux = [&](const search::HypothesisBank&) {
      if (!row_embeddings) {
        std::vector<std::string> texts;
        for (std::size_t r = 0; r < train.row_count(); ++r) texts.push_back(row_text(train, r));
        row_embeddings = gateway->embed(config.embedding_model, texts);
      }
      data::SamplingAux aux;
      aux.embeddings = *row_embeddings;
      return aux;
    };
  }

  search::SessionLog log(log_path);
  search::DiscoveryContext ctx;
  ctx.task_description = config.task_description();
  ctx.dataset_name = config.dataset.filename().string();
  ctx.skip_iterations = done;
  ctx.on_iteration_end = [&](const search::HypothesisBank& b) { search::save_bank(bank_path, b, config.search); };

  search::DiscoveryResult result;
  try {
    result = search::run_discovery(train, config.search, roles, std::move(bank), ctx, log);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  search::save_bank(bank_path, result.bank, config.search);
  write_file(config.out / "report.md",
             search::render_markdown_report(result.bank, read_jsonl(log_path), config.search));

  const auto totals = gateway->totals();
  out << fmt::format("iterations: {} completed, {} failed, {} skipped\n", result.iterations_completed,
                     result.iterations_failed, result.iterations_skipped);
  out << fmt::format("bank: {} hypotheses in {}\n", result.bank.entries.size(), bank_path.string());
  out << fmt::format("session log: {}\nreport: {}\n", log_path.string(), (config.out / "report.md").string());
  out << fmt::format("llm: {} completions, {} embeddings, {} provider calls, cost {:.4f}\n", totals.completions,
                     totals.embeddings, totals.provider_calls, totals.cost);
  for (const auto& r : log.records()) {
    if (r.value("type", "") == "iteration_failed") {
      err << fmt::format("iteration {} failed: {}\n", r.at("i").get<std::size_t>(), r.at("error").get<std::string>());
    }
  }
  if (result.iterations_completed + result.iterations_skipped == 0) {
    err << "error: no iteration completed\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_infer(RunConfig config, const InferOptions& options, std::ostream& out, std::ostream& err) {
  data::Dataset train, test;
  search::HypothesisBank bank;
  try {
    if (options.method != "regression" && options.method != "two_step") {
      throw InvalidArgument(fmt::format("unknown method '{}' (regression or two_step)", options.method));
    }
    if (options.k == 0) throw InvalidArgument("k must be at least 1");
    validate(config);
    auto [tr, held] = split(load_dataset(config), config);
    train = std::move(tr);
    if (options.test.empty()) {
      test = std::move(held);
    } else {
      if (!fs::exists(options.test)) {
        throw InvalidArgument(fmt::format("test dataset '{}' does not exist", options.test.string()));
      }
      test = data::load_table(options.test, config.load_options());
      if (test.has_column(config.outcome)) test.set_outcome(config.outcome);
    }
    if (test.row_count() == 0) throw InvalidArgument("the test set is empty (set test_fraction or --test)");
    bank = load_nonempty_bank(options.bank.empty() ? config.out / "bank.jsonl" : options.bank);
  } catch (const Error& e) {
    return usage_error(err, e.what());
  }
  fs::create_directories(config.out);
  const bool scored = test.outcome_column().has_value();
  const auto predictions_path = config.out / "predictions.csv";

  try {
    if (options.method == "regression") {
      LazyLabels labels(config, config.out / "annotations.jsonl");
      const auto train_m = eval::featurize_by_bank(train, bank, &labels);
      const auto test_m = eval::featurize_by_bank(test, bank, &labels);
      std::set<std::string> missing;
      for (const auto& id : train_m.hypothesis_ids) {
        if (std::find(test_m.hypothesis_ids.begin(), test_m.hypothesis_ids.end(), id) == test_m.hypothesis_ids.end()) {
          missing.insert(id);
        }
      }
      if (!missing.empty()) {
        err << "error: the test set does not support every hypothesis:\n";
        for (const auto& w : test_m.warnings) err << "  " << w << "\n";
        return kExitUsage;
      }
      if (train_m.names.empty()) {
        err << "error: no hypothesis produced a usable feature on the training data\n";
        for (const auto& w : train_m.warnings) err << "  " << w << "\n";
        return kExitFailure;
      }
      const auto y = eval::binary_outcome(train, config.outcome, positive_of(config));
      std::optional<std::vector<double>> ty;
      if (scored) ty = eval::binary_outcome(test, config.outcome, positive_of(config));
      const auto res = eval::regression_infer(train_m, y, test_m, ty);

      const auto pos = eval::positive_level(train, config.outcome, positive_of(config));
      std::string neg;
      for (const auto& l : outcome_levels(train, config.outcome)) {
        if (l != pos) neg = l;
      }
      std::string csv = "row,prediction,probability\n";
      for (std::size_t r = 0; r < res.predictions.size(); ++r) {
        csv += fmt::format("{},{},{:.6f}\n", r + 1, csv_field(res.predictions[r] ? pos : neg), res.probabilities[r]);
      }
      write_file(predictions_path, csv);
      out << fmt::format("method: regression\nfeatures: {}\ntest rows: {}\n", res.features.size(), test.row_count());
      if (res.accuracy) out << fmt::format("accuracy: {:.4f}\n", *res.accuracy);
      for (const auto& w : res.warnings) err << "warning: " << w << "\n";
    } else {
      std::unique_ptr<llm::Gateway> gateway;
      try {
        gateway = make_gateway(config);
      } catch (const Error& e) {
        return usage_error(err, e.what());
      }
      eval::TwoStepOptions o;
      o.model = config.generator_model;
      o.task_description = config.task_description();
      o.outcome = config.outcome;
      o.labels = config.labels.empty() ? outcome_levels(train, config.outcome) : config.labels;
      o.k = options.k;
      std::vector<std::size_t> rows(test.row_count());
      for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
      const auto preds = eval::two_step_infer_rows(test, rows, bank, *gateway, o, config.max_in_flight);

      const auto log_path = config.out / "inference.jsonl";
      fs::remove(log_path);
      std::string csv = "row,prediction\n";
      std::size_t correct = 0, truth = 0, errors = 0;
      for (std::size_t r = 0; r < preds.size(); ++r) {
        const auto& p = preds[r];
        append_jsonl(log_path, json{{"row", r + 1},
                                    {"selected", p.selected},
                                    {"selection_fallback", p.selection_fallback},
                                    {"label", p.label ? json(*p.label) : json(nullptr)},
                                    {"error", p.error ? json(*p.error) : json(nullptr)}});
        csv += fmt::format("{},{}\n", r + 1, csv_field(p.label.value_or("")));
        errors += p.label ? 0 : 1;
        if (scored) {
          const auto& col = test.column(config.outcome);
          if (data::is_null(col.values[r])) continue;
          ++truth;
          correct += p.label && *p.label == data::render_cell(col.values[r], col.kind);
        }
      }
      write_file(predictions_path, csv);
      out << fmt::format("method: two_step (k = {})\ntest rows: {}\nunlabeled predictions: {}\n", o.k, preds.size(),
                         errors);
      if (truth) out << fmt::format("accuracy: {:.4f}\n", static_cast<double>(correct) / static_cast<double>(truth));
      out << fmt::format("selection log: {}\n", log_path.string());
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  out << fmt::format("predictions: {}\n", predictions_path.string());
  return kExitOk;
}

int cmd_evaluate(RunConfig config, fs::path bank_path, std::ostream& out, std::ostream& err) {
  data::Dataset held;
  search::HypothesisBank bank;
  try {
    validate(config);
    auto [train, test] = split(load_dataset(config), config);
    held = config.test_fraction == 0.0 ? std::move(train) : std::move(test);
    bank = load_nonempty_bank(bank_path.empty() ? config.out / "bank.jsonl" : bank_path);
  } catch (const Error& e) {
    return usage_error(err, e.what());
  }
  try {
    LazyLabels labels(config, config.out / "annotations.jsonl");
    const auto m = eval::featurize_by_bank(held, bank, &labels);
    const auto y = eval::binary_outcome(held, config.outcome, positive_of(config));
    const auto s = eval::count_significant(m, y, config.search.alpha);
    out << fmt::format("Hypotheses in bank: {}\nHeld-out rows: {}\n", bank.entries.size(), held.row_count());
    out << eval::render_significance(s);
    for (const auto& w : m.warnings) err << "warning: " << w << "\n";
    for (const auto& w : s.warnings) err << "warning: " << w << "\n";
    auto j = eval::to_json(s);
    j["bank_entries"] = bank.entries.size();
    j["rows"] = held.row_count();
    fs::create_directories(config.out);
    write_file(config.out / "evaluation.json", j.dump(2) + "\n");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_digest(RunConfig config, std::ostream& out, std::ostream& err) {
  try {
    if (config.dataset.empty()) throw InvalidArgument("no dataset given (--dataset)");
    if (!fs::exists(config.dataset)) {
      throw InvalidArgument(fmt::format("dataset '{}' does not exist", config.dataset.string()));
    }
    auto d = data::load_table(config.dataset, config.load_options());
    if (!config.outcome.empty()) {
      if (!d.has_column(config.outcome)) throw InvalidArgument(fmt::format("no column '{}'", config.outcome));
      d.set_outcome(config.outcome);
    }
    auto strategy = data::SamplingStrategy::parse(config.sampling);
    if (strategy.kind != data::SamplingStrategy::Kind::none) strategy.kind = data::SamplingStrategy::Kind::random;
    const auto rows = data::sample_observations(d, strategy, config.search.rng_seed);
    out << data::summarize(d, rows).rendered_text;
  } catch (const Error& e) {
    return usage_error(err, e.what());
  }
  return kExitOk;
}

int cmd_replay(const fs::path& session_log, const fs::path& dataset, std::ostream& out, std::ostream& err) {
  RunConfig config;
  data::Dataset train;
  std::vector<json> records;
  try {
    if (!fs::exists(session_log)) {
      throw InvalidArgument(fmt::format("session log '{}' does not exist", session_log.string()));
    }
    const auto manifest = session_log.parent_path() / "run.json";
    if (!fs::exists(manifest)) {
      throw InvalidArgument(fmt::format("no run.json next to {}", session_log.string()));
    }
    config = config_from_manifest(json::parse(read_file(manifest)));
    if (!dataset.empty()) config.dataset = dataset;
    if (!fs::exists(config.dataset)) {
      throw InvalidArgument(fmt::format("dataset '{}' does not exist", config.dataset.string()));
    }
    train = split(load_dataset(config), config).first;
    records = read_jsonl(session_log);
  } catch (const json::exception& e) {
    return usage_error(err, e.what());
  } catch (const Error& e) {
    return usage_error(err, e.what());
  }

  LazyLabels labels(config, session_log.parent_path() / "annotations.jsonl");
  std::size_t reports = 0, steps = 0;
  std::vector<std::string> mismatches;
  auto mismatch = [&](const std::string& where, const json& logged, const json& recomputed) {
    const auto patch = json::diff(logged, recomputed);
    std::string detail = "record differs";
    if (!patch.empty()) {
      const json::json_pointer ptr(patch.front().at("path").get<std::string>());
      const auto was = logged.contains(ptr) ? logged.at(ptr).dump() : std::string("(absent)");
      const auto now = recomputed.contains(ptr) ? recomputed.at(ptr).dump() : std::string("(absent)");
      detail = fmt::format("{}: logged {}, recomputed {}", ptr.to_string(), was, now);
    }
    mismatches.push_back(fmt::format("{}: {}", where, detail));
  };

  for (const auto& rec : records) {
    if (rec.value("type", "") != "report") continue;
    ++reports;
    const auto id = rec.value("id", std::string("?"));
    agents::AnalysisReport report;
    try {
      report = agents::report_from_json(rec.at("report"));
    } catch (const std::exception& e) {
      mismatches.push_back(fmt::format("{}: unreadable report: {}", id, e.what()));
      continue;
    }
    lab::PlanSession session(train, &labels);
    lab::PlanOutcome outcome;
    try {
      outcome = session.run(report.plan);
    } catch (const Error& e) {
      mismatches.push_back(fmt::format("{}: plan could not be re-executed: {}", id, e.what()));
      continue;
    }
    if (outcome.failure) {
      mismatches.push_back(fmt::format("{}: step {} failed on re-execution: {}", id, outcome.failure->plan_index + 1,
                                       outcome.failure->message));
      continue;
    }
    const auto& history = session.history();
    if (history.size() != report.step_results.size()) {
      mismatches.push_back(fmt::format("{}: {} steps logged, {} re-executed", id, report.step_results.size(),
                                       history.size()));
      continue;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      ++steps;
      const auto recomputed = json::parse(lab::step_result_to_json(history[k]).dump());
      if (recomputed != report.step_results[k]) {
        mismatch(fmt::format("{} step {} ({})", id, k + 1, lab::describe_step(history[k].step)), report.step_results[k],
                 recomputed);
      }
    }
    if (report.headline) {
      const auto& h = *report.headline;
      if (h.step < 1 || h.step > history.size()) {
        mismatches.push_back(fmt::format("{}: headline names step {} of {}", id, h.step, history.size()));
      } else {
        const auto logged = json::parse(agents::to_json(h).dump());
        const auto recomputed = json::parse(agents::to_json(agents::headline_from_step(history[h.step - 1])).dump());
        if (logged != recomputed) mismatch(fmt::format("{} headline (step {})", id, h.step), logged, recomputed);
      }
    }
  }

  for (const auto& m : mismatches) err << "MISMATCH " << m << "\n";
  out << fmt::format("audited {} reports, {} steps: {} mismatch(es)\n", reports, steps, mismatches.size());
  return mismatches.empty() ? kExitOk : kExitFailure;
}

}  // namespace hypolab::cli
