#include "hypolab/agents/experimenter.hpp"

#include <array>
#include <cctype>
#include <map>

#include <fmt/format.h>

#include "hypolab/common/text.hpp"
#include "hypolab/lab/plan.hpp"

namespace hypolab::agents {

namespace {

constexpr std::array<std::string_view, 7> kHeadings = {"feature construction", "statistical test", "results",
                                                       "robustness", "conclusion", "verdict", "headline step"};

// If `line` opens a report section, the heading index and the text after
// the colon.
std::optional<std::pair<std::size_t, std::string>> heading_of(std::string_view line) {
  std::string s(text::trim(line));
  std::size_t b = 0;
  while (b < s.size() && (s[b] == '#' || s[b] == '*' || s[b] == '-' || s[b] == '_' || s[b] == ' ')) ++b;
  s = s.substr(b);
  for (std::size_t h = 0; h < kHeadings.size(); ++h) {
    if (!text::starts_with_icase(s, kHeadings[h])) continue;
    std::string rest = s.substr(kHeadings[h].size());
    std::size_t k = 0;
    while (k < rest.size() && (rest[k] == '*' || rest[k] == '_' || rest[k] == ' ')) ++k;
    if (k < rest.size() && rest[k] == ':') {
      ++k;
      while (k < rest.size() && (rest[k] == '*' || rest[k] == '_')) ++k;
    } else if (k < rest.size()) {
      continue;  // "Results of ..." inside prose is not a heading
    }
    return std::make_pair(h, std::string(text::trim(std::string_view(rest).substr(k))));
  }
  return std::nullopt;
}

std::optional<Verdict> verdict_in(std::string_view s) {
  const auto t = text::to_lower(s);
  for (const char* neg : {"unsupported", "not supported", "no support", "does not support"}) {
    if (t.find(neg) != std::string::npos) return Verdict::unsupported;
  }
  if (t.find("inconclusive") != std::string::npos) return Verdict::inconclusive;
  if (t.find("supported") != std::string::npos) return Verdict::supported;
  return std::nullopt;
}

std::optional<std::size_t> first_integer(std::string_view s) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (std::isdigit(static_cast<unsigned char>(s[k]))) {
      std::size_t v = 0;
      while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) v = v * 10 + static_cast<std::size_t>(s[k++] - '0');
      return v;
    }
  }
  return std::nullopt;
}

std::string strip_plan_blocks(std::string_view s) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = s.find("```", pos);
    if (open == std::string_view::npos) {
      out += s.substr(pos);
      break;
    }
    out += s.substr(pos, open - pos);
    const auto close = s.find("```", open + 3);
    if (close == std::string_view::npos) break;
    pos = close + 3;
  }
  return out;
}

}  // namespace

std::optional<std::string> extract_plan_block(std::string_view s) {
  std::size_t pos = 0;
  std::optional<std::string> json_array;
  while (true) {
    const auto open = s.find("```", pos);
    if (open == std::string_view::npos) break;
    const auto eol = s.find('\n', open);
    if (eol == std::string_view::npos) break;
    const auto tag = text::to_lower(text::trim(s.substr(open + 3, eol - open - 3)));
    const auto close = s.find("```", eol);
    if (close == std::string_view::npos) break;
    const std::string body(s.substr(eol + 1, close - eol - 1));
    if (tag == "plan") return body;
    if (!json_array && (tag == "json" || tag.empty())) {
      const auto t = text::trim(body);
      if (!t.empty() && t.front() == '[' && t.find("\"op\"") != std::string_view::npos) json_array = body;
    }
    pos = close + 3;
  }
  return json_array;
}

bool looks_like_report(std::string_view response) {
  std::size_t found = 0;
  for (const auto& line : text::split(strip_plan_blocks(response), '\n')) {
    if (auto h = heading_of(line)) {
      if (h->first == 5) return true;
      ++found;
    }
  }
  return found >= 2;
}

AnalysisReport parse_report(std::string_view response, const std::vector<lab::StepResult>& history, bool test_mode) {
  AnalysisReport r;
  r.test_mode = test_mode;
  std::array<std::string, kHeadings.size()> sections;
  std::array<bool, kHeadings.size()> seen{};
  std::optional<std::size_t> current;
  for (const auto& line : text::split(strip_plan_blocks(response), '\n')) {
    if (auto h = heading_of(line)) {
      current = h->first;
      seen[h->first] = true;
      if (!sections[h->first].empty()) sections[h->first] += "\n";
      sections[h->first] += h->second;
      continue;
    }
    if (current && *current < 5) {
      if (!sections[*current].empty()) sections[*current] += "\n";
      sections[*current] += line;
    }
  }
  auto clean = [](const std::string& s) { return std::string(text::trim(s)); };
  r.feature_construction = clean(sections[0]);
  r.statistical_test = clean(sections[1]);
  r.results = clean(sections[2]);
  r.robustness = clean(sections[3]);
  r.conclusion = clean(sections[4]);
  r.refinement_guidance = r.conclusion;

  if (seen[5]) {
    auto v = verdict_in(sections[5]);
    if (!v) throw ParseError(fmt::format("unreadable verdict '{}'", clean(sections[5])));
    r.verdict = *v;
  } else if (auto v = verdict_in(r.conclusion)) {
    r.verdict = *v;
  }

  const lab::StepResult* headline = nullptr;
  if (seen[6]) {
    const auto n = first_integer(sections[6]);
    if (!n) throw ParseError(fmt::format("unreadable headline step '{}'", clean(sections[6])));
    for (const auto& s : history) {
      if (s.number == *n) headline = &s;
    }
    if (!headline) throw ParseError(fmt::format("headline step {} was never executed", *n));
    if (!headline->test && !headline->regression) {
      throw ParseError(fmt::format("headline step {} has no test or regression result", *n));
    }
  } else {
    for (const auto& s : history) {
      if (s.test || s.regression) headline = &s;
    }
  }
  if (headline) r.headline = headline_from_step(*headline);
  if (test_mode && r.verdict == Verdict::supported && !r.headline) {
    throw ParseError("a supported verdict needs an executed test or regression as headline");
  }
  return r;
}

AnalysisReport run_experimenter(const ExperimenterInput& input, const data::Dataset& dataset, llm::Gateway& gateway,
                                const ExperimenterSetup& setup, const ExchangeObserver& observer) {
  if (!dataset.outcome_column()) throw InvalidArgument("dataset has no outcome column");
  lab::PlanSession session(dataset, setup.labels, setup.budget);
  auto exchange = build_experimenter_prompt(input, setup.model, setup.temperature);
  const bool test_mode = input.proposal.test_mode;

  auto attach = [&](AnalysisReport& r, std::size_t turns) {
    r.test_mode = test_mode;
    r.turns = turns;
    r.plan = session.executed_plan();
    r.step_results.clear();
    for (const auto& s : session.history()) r.step_results.push_back(lab::step_result_to_json(s));
    r.feature_specs_used.clear();
    for (const auto& step : r.plan) {
      if (const auto* f = std::get_if<lab::FeaturizeStep>(&step)) r.feature_specs_used.push_back(f->spec);
    }
  };

  std::size_t failures = 0;
  std::string give_up;
  std::size_t turn = 0;
  while (turn < setup.limits.max_turns) {
    ++turn;
    const auto reply = gateway.complete(exchange);
    if (observer) observer("experimenter", exchange, reply);
    exchange.messages.push_back({llm::Role::assistant, reply.text, {}});

    std::string feedback;
    bool failed = false;
    if (auto block = extract_plan_block(reply.text)) {
      try {
        const auto plan = lab::plan_from_text(*block);
        if (plan.empty()) throw ParseError("the plan block holds no steps");
        const auto outcome = session.run(plan);
        feedback = lab::describe_outcome(outcome);
        failed = outcome.failure.has_value();
      } catch (const Error& e) {
        feedback = fmt::format("Plan rejected: {}", e.what());
        failed = true;
      }
    }
    if (looks_like_report(reply.text) && !failed) {
      try {
        auto report = parse_report(reply.text, session.history(), test_mode);
        attach(report, turn);
        return report;
      } catch (const ParseError& e) {
        if (!feedback.empty()) feedback += "\n\n";
        feedback += fmt::format("Report rejected: {}. Fix the report and send it again.", e.what());
        failed = true;
      }
    } else if (feedback.empty()) {
      feedback = "Reply with a ```plan block of steps to run, or with the final report ending in the Verdict and "
                 "Headline Step lines.";
      failed = true;
    }

    failures = failed ? failures + 1 : 0;
    if (failures >= setup.limits.max_consecutive_failures) {
      give_up = fmt::format("stopped after {} consecutive failed turns", failures);
      break;
    }
    exchange.messages.push_back({llm::Role::tool, feedback, {}});
  }

  AnalysisReport r;
  r.verdict = Verdict::inconclusive;
  r.warnings.push_back(give_up.empty() ? fmt::format("no report after {} turns", setup.limits.max_turns) : give_up);
  attach(r, turn);
  return r;
}

}  // namespace hypolab::agents
