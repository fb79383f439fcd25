#include "hypolab/search/discovery.hpp"

#include <fmt/format.h>

#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/log.hpp"
#include "hypolab/common/rng.hpp"
#include "hypolab/common/text.hpp"
#include "hypolab/data/digest.hpp"
#include "hypolab/stats/effect.hpp"

namespace hypolab::search {

SessionLog::SessionLog(std::filesystem::path path) : path_(std::move(path)) {
  if (!path_.empty() && path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void SessionLog::append(json record) {
  record["v"] = kLogVersion;
  if (!path_.empty()) append_jsonl(path_, record);
  records_.push_back(std::move(record));
}

std::set<std::size_t> SessionLog::completed_iterations(const std::filesystem::path& path) {
  std::set<std::size_t> done;
  if (!std::filesystem::exists(path)) return done;
  for (const auto& r : read_jsonl(path)) {
    if (r.value("type", "") == "iteration_end") done.insert(r.at("i").get<std::size_t>());
  }
  return done;
}

namespace {

// Logs only the messages a conversation added since its previous exchange.
class ExchangeLogger {
 public:
  ExchangeLogger(SessionLog& log, std::size_t i) : log_(log), i_(i) {}
  void set_step(std::size_t j) { j_ = j; }

  void operator()(std::string_view agent, const llm::ChatExchange& e, const llm::Completion& c) {
    auto& seen = seen_[std::string(agent)];
    std::size_t start = 0;
    if (seen.size() <= e.messages.size()) {
      bool prefix = true;
      for (std::size_t k = 0; k < seen.size() && prefix; ++k) {
        prefix = seen[k].role == e.messages[k].role && seen[k].content == e.messages[k].content;
      }
      if (prefix) start = seen.size();
    }
    json messages = json::array();
    for (std::size_t k = start; k < e.messages.size(); ++k) {
      messages.push_back({{"role", llm::to_string(e.messages[k].role)}, {"content", e.messages[k].content}});
    }
    log_.append(json{{"type", "exchange"},
                     {"i", i_},
                     {"j", j_},
                     {"agent", agent},
                     {"model", e.model},
                     {"hash", c.request_hash},
                     {"messages", messages},
                     {"response", c.text}});
    seen = e.messages;
    seen.push_back({llm::Role::assistant, c.text, {}});
  }

 private:
  SessionLog& log_;
  std::size_t i_;
  std::size_t j_ = 0;
  std::map<std::string, std::vector<llm::Message>> seen_;
};

}  // namespace

DiscoveryResult run_discovery(const data::Dataset& dataset, const SearchConfig& config, const DiscoveryRoles& roles,
                              HypothesisBank bank, const DiscoveryContext& context, SessionLog& log) {
  validate(config);
  if (!roles.gateway) throw InvalidArgument("discovery needs a gateway");
  if (!dataset.outcome_column()) throw InvalidArgument("dataset has no outcome column");
  bank.capacity = config.bank_capacity;

  DiscoveryResult result;
  log.append(json{{"type", "run_start"},
                  {"config", to_json(config)},
                  {"dataset", context.dataset_name},
                  {"rows", dataset.row_count()},
                  {"outcome", *dataset.outcome_column()},
                  {"task", context.task_description},
                  {"models",
                   {{"generator", roles.generator_model},
                    {"experimenter", roles.experimenter_model},
                    {"embedder", roles.embedding_model}}},
                  {"bank_entries", bank.entries.size()}});

  std::size_t accepted_so_far = 0;
  for (const auto& e : bank.entries) accepted_so_far = std::max(accepted_so_far, e.accepted_order);

  const std::size_t T = config.refinement_steps;
  for (std::size_t i = 1; i <= config.outer_iterations; ++i) {
    if (context.skip_iterations.count(i)) {
      ++result.iterations_skipped;
      continue;
    }
    ExchangeLogger exchange_log(log, i);
    agents::ExchangeObserver observer = std::ref(exchange_log);
    std::size_t j = 0;
    try {
      const auto aux = roles.sampling_aux ? roles.sampling_aux(bank) : data::SamplingAux{};
      const auto rows = data::sample_observations(dataset, config.sampling, derive_seed(config.rng_seed, i), aux);
      log.append(json{{"type", "iteration_start"}, {"i", i}, {"sample_rows", rows}, {"bank_size", bank.entries.size()}});
      const auto digest = data::summarize(dataset, rows).rendered_text;

      agents::SessionMemory memory;
      std::vector<HypothesisRecord> session;
      std::optional<std::string> current, previous;
      for (j = 1; j <= T; ++j) {
        exchange_log.set_step(j);
        agents::GeneratorInput gen;
        gen.task_description = context.task_description;
        gen.data_description = digest;
        gen.bank = bank.texts();
        for (const auto& e : memory.entries) gen.session_history.push_back(e.hypothesis);
        gen.status = {i, config.outer_iterations, j, T};
        gen.current_hypothesis = current;
        gen.previous_analysis = previous;
        gen.novelty_clause = config.novelty_clause;
        const auto proposal = agents::request_proposal(
            *roles.gateway, agents::build_generator_prompt(gen, roles.generator_model, roles.generator_temperature),
            observer);
        const auto id = record_id(i, j);
        log.append(json{{"type", "proposal"}, {"i", i}, {"j", j}, {"id", id}, {"proposal", agents::to_json(proposal)}});

        agents::ExperimenterSetup setup;
        setup.model = roles.experimenter_model;
        setup.temperature = roles.experimenter_temperature;
        setup.limits = roles.limits;
        setup.budget = roles.budget;
        setup.labels = roles.labels;
        auto report = agents::run_experimenter({context.task_description, context.dataset_name, digest, proposal},
                                               dataset, *roles.gateway, setup, observer);
        log.append(json{{"type", "report"}, {"i", i}, {"j", j}, {"id", id}, {"report", agents::to_json(report)}});

        HypothesisRecord rec;
        rec.id = id;
        rec.text = proposal.hypothesis;
        rec.request = proposal.request;
        rec.seed_index = i;
        rec.refinement_index = j;
        rec.report = report;
        session.push_back(rec);
        memory.entries.push_back({proposal.hypothesis, std::move(report)});
        current = proposal.hypothesis;
        previous = agents::summarize_report(memory.entries.back().report);
      }
      j = 0;

      const auto pick = select_accepted(session, config.alpha, T);
      json candidates = json::array();
      for (const auto& r : session) {
        candidates.push_back({{"id", r.id},
                              {"test_mode", r.report.test_mode},
                              {"verdict", agents::to_string(r.report.verdict)},
                              {"p", r.report.headline_p() ? json(*r.report.headline_p()) : json(nullptr)},
                              {"support_n", r.report.support_n()}});
      }
      json acceptance{{"type", "acceptance"}, {"i", i}, {"threshold", config.threshold()}, {"candidates", candidates}};
      if (pick && bank.contains_text(session[*pick].text)) {
        acceptance["accepted"] = nullptr;
        acceptance["reason"] = "duplicate of a bank entry";
      } else if (pick) {
        auto rec = session[*pick];
        rec.accepted = true;
        rec.accepted_order = ++accepted_so_far;
        rec.embedding = roles.gateway->embed(roles.embedding_model, {rec.text}).front();
        acceptance["accepted"] = rec.id;
        acceptance["novelty"] = novelty_score(rec.embedding, bank);
        bank.entries.push_back(std::move(rec));
      } else {
        acceptance["accepted"] = nullptr;
        acceptance["reason"] = "no supported testing-mode result below the threshold";
      }
      log.append(acceptance);

      if (bank.entries.size() > bank.capacity) {
        const auto before = bank.entries;
        bank = prune_bank(bank);
        json removed = json::array();
        for (const auto& e : before) {
          if (!bank.contains_text(e.text)) removed.push_back(e.id);
        }
        log.append(json{{"type", "prune"}, {"i", i}, {"removed", removed}, {"kept", bank.entries.size()}});
      }
      log.append(json{{"type", "iteration_end"}, {"i", i}, {"status", "completed"}, {"bank_size", bank.entries.size()}});
      ++result.iterations_completed;
    } catch (const Error& e) {
      log_warning(fmt::format("iteration {} abandoned: {}", i, e.what()));
      log.append(json{{"type", "iteration_failed"}, {"i", i}, {"j", j}, {"error", e.what()}});
      log.append(json{{"type", "iteration_end"}, {"i", i}, {"status", "failed"}, {"bank_size", bank.entries.size()}});
      ++result.iterations_failed;
    }
    if (context.on_iteration_end) context.on_iteration_end(bank);
  }
  result.bank = std::move(bank);
  return result;
}

std::string render_markdown_report(const HypothesisBank& bank, const std::vector<json>& log_records,
                                   const SearchConfig& config) {
  std::string out = "# Discovery report\n\n";
  out += fmt::format("Outer iterations: {}, refinements per iteration: {}, bank capacity: {}\n\n",
                     config.outer_iterations, config.refinement_steps, config.bank_capacity);
  out += fmt::format("Acceptance threshold: alpha / T = {} / {} = {}\n\n", data::format_number(config.alpha),
                     config.refinement_steps, data::format_number(config.threshold()));

  out += fmt::format("## Accepted hypotheses ({})\n\n", bank.entries.size());
  if (bank.entries.empty()) {
    out += "None.\n\n";
  } else {
    out += "| id | hypothesis | p | effect | magnitude | n |\n|---|---|---|---|---|---|\n";
    for (const auto& e : bank.entries) {
      std::string p = "-", effect = "-", magnitude = "-", n = "-";
      if (const auto& h = e.report.headline) {
        p = data::format_number(h->p);
        effect = fmt::format("{} = {}", stats::to_string(h->effect.kind), data::format_number(h->effect.value));
        magnitude = std::string(stats::to_string(stats::describe_effect(h->effect)));
        n = std::to_string(h->support_n);
      }
      std::string text = e.text;
      for (char& c : text) {
        if (c == '|') c = '/';
        if (c == '\n') c = ' ';
      }
      out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", e.id, text, p, effect, magnitude, n);
    }
    out += "\n";
  }

  out += "## Verdict history\n\n";
  std::map<std::string, std::string> texts;
  for (const auto& r : log_records) {
    if (r.value("type", "") == "proposal") texts[r.at("id").get<std::string>()] = r.at("proposal").at("hypothesis");
  }
  for (const auto& r : log_records) {
    const auto type = r.value("type", "");
    if (type == "iteration_start") {
      out += fmt::format("### Iteration {}\n\n", r.at("i").get<std::size_t>());
    } else if (type == "report") {
      const auto id = r.at("id").get<std::string>();
      const auto rep = agents::report_from_json(r.at("report"));
      std::string line = fmt::format("- {} ({}): {}", id, rep.test_mode ? "test" : "explore", agents::to_string(rep.verdict));
      if (rep.headline) line += fmt::format(", p = {}", data::format_number(rep.headline->p));
      line += fmt::format(". {}\n", texts[id]);
      out += line;
    } else if (type == "acceptance") {
      out += r.at("accepted").is_null() ? std::string("- accepted: none\n\n")
                                        : fmt::format("- accepted: {}\n\n", r.at("accepted").get<std::string>());
    } else if (type == "iteration_failed") {
      out += fmt::format("- iteration failed: {}\n\n", r.at("error").get<std::string>());
    } else if (type == "prune") {
      std::vector<std::string> removed;
      for (const auto& x : r.at("removed")) removed.push_back(x.get<std::string>());
      out += fmt::format("- pruned: {}\n\n", text::join(removed, ", "));
    }
  }
  return out;
}

}  // namespace hypolab::search
