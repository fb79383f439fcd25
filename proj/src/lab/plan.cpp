#include "hypolab/lab/plan.hpp"

#include <fmt/format.h>

#include "hypolab/common/error.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::lab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string need_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(fmt::format("plan step '{}' needs a string field '{}'", j.value("op", "?"), key));
  }
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ParseError(fmt::format("plan step '{}' needs a list field '{}'", j.value("op", "?"), key));
    return {};
  }
  if (it->is_string()) return {it->get<std::string>()};
  if (!it->is_array()) throw ParseError(fmt::format("field '{}' must be a list of strings", key));
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ParseError(fmt::format("field '{}' must be a list of strings", key));
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

std::optional<double> optional_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(fmt::format("field '{}' must be a number", key));
  return it->get<double>();
}

}  // namespace

json to_json(const FeatureSpec& spec) {
  json j{{"name", spec.name},
         {"description", spec.description},
         {"source_columns", spec.source_columns},
         {"mode", spec.mode == FeatureSpec::Mode::llm ? "llm" : "programmatic"}};
  if (spec.mode == FeatureSpec::Mode::llm) {
    j["labels"] = spec.labels;
  } else {
    j["featurizer"] = spec.featurizer;
    j["params"] = spec.params;
  }
  return j;
}

FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec s;
  s.name = need_string(j, "name");
  s.description = j.value("description", "");
  s.source_columns = string_list(j, "source_columns", true);
  const std::string mode = j.value("mode", "programmatic");
  if (mode == "llm") {
    s.mode = FeatureSpec::Mode::llm;
    s.labels = string_list(j, "labels", true);
  } else if (mode == "programmatic") {
    s.featurizer = need_string(j, "featurizer");
    if (auto it = j.find("params"); it != j.end() && !it->is_null()) {
      if (!it->is_object()) throw ParseError("featurize 'params' must be an object");
      s.params = *it;
    }
  } else {
    throw ParseError(fmt::format("unknown featurize mode '{}'", mode));
  }
  return s;
}

json step_to_json(const PlanStep& step) {
  return std::visit(
      overloaded{
          [](const FeaturizeStep& s) {
            json j = to_json(s.spec);
            j["op"] = "featurize";
            return j;
          },
          [](const DeriveStep& s) { return json{{"op", "derive"}, {"target", s.target}, {"expr", s.expr}}; },
          [](const GroupRankStep& s) {
            return json{{"op", "group_rank"},
                        {"target", s.target},
                        {"group_key", s.group_key},
                        {"order_by", s.order_by},
                        {"direction", s.descending ? "descending" : "ascending"}};
          },
          [](const FilterStep& s) {
            json j{{"op", "filter"}, {"column", s.column}, {"cmp", s.cmp}};
            if (s.value) j["value"] = *s.value;
            if (s.quantile) j["quantile"] = *s.quantile;
            if (s.level) j["level"] = *s.level;
            return j;
          },
          [](const TestStep& s) {
            json j{{"op", "test"}, {"test", s.test}, {"feature", s.feature}, {"outcome", s.outcome}};
            if (s.positive) j["positive"] = *s.positive;
            return j;
          },
          [](const RegressStep& s) {
            json j{{"op", "regress"}, {"outcome", s.outcome}, {"features", s.features}, {"controls", s.controls}};
            if (s.positive) j["positive"] = *s.positive;
            return j;
          },
      },
      step);
}

PlanStep step_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("plan step must be an object");
  const std::string op = need_string(j, "op");
  if (op == "featurize") return FeaturizeStep{feature_spec_from_json(j)};
  if (op == "derive") return DeriveStep{need_string(j, "target"), need_string(j, "expr")};
  if (op == "group_rank") {
    const std::string dir = text::to_lower(j.value("direction", "ascending"));
    if (dir != "ascending" && dir != "descending") throw ParseError(fmt::format("unknown direction '{}'", dir));
    return GroupRankStep{need_string(j, "target"), need_string(j, "group_key"), need_string(j, "order_by"),
                         dir == "descending"};
  }
  if (op == "filter") {
    FilterStep f;
    f.column = need_string(j, "column");
    f.cmp = need_string(j, "cmp");
    if (auto it = j.find("value"); it != j.end() && it->is_string()) {
      f.level = it->get<std::string>();
    } else {
      f.value = optional_number(j, "value");
    }
    f.quantile = optional_number(j, "quantile");
    if (auto l = optional_string(j, "level")) f.level = l;
    const int given = f.value.has_value() + f.quantile.has_value() + f.level.has_value();
    if (given != 1) throw ParseError("filter needs exactly one of 'value', 'quantile', 'level'");
    return f;
  }
  if (op == "test") {
    return TestStep{need_string(j, "test"), need_string(j, "feature"), need_string(j, "outcome"),
                    optional_string(j, "positive")};
  }
  if (op == "regress") {
    return RegressStep{need_string(j, "outcome"), string_list(j, "features", true), string_list(j, "controls", false),
                       optional_string(j, "positive")};
  }
  throw ParseError(fmt::format("unknown plan op '{}'", op));
}

std::string describe_step(const PlanStep& step) {
  return std::visit(
      overloaded{
          [](const FeaturizeStep& s) {
            if (s.spec.mode == FeatureSpec::Mode::llm) {
              return fmt::format("featurize {} (llm labels {{{}}}) from {}", s.spec.name, text::join(s.spec.labels, ", "),
                                 text::join(s.spec.source_columns, ", "));
            }
            return fmt::format("featurize {} = {}({}) {}", s.spec.name, s.spec.featurizer,
                               text::join(s.spec.source_columns, ", "), s.spec.params.dump());
          },
          [](const DeriveStep& s) { return fmt::format("derive {} = {}", s.target, s.expr); },
          [](const GroupRankStep& s) {
            return fmt::format("group_rank {} = rank of {} within {} ({})", s.target, s.order_by, s.group_key,
                               s.descending ? "descending" : "ascending");
          },
          [](const FilterStep& s) {
            if (s.quantile) return fmt::format("filter {} {} quantile {}", s.column, s.cmp, *s.quantile);
            if (s.level) return fmt::format("filter {} {} '{}'", s.column, s.cmp, *s.level);
            return fmt::format("filter {} {} {}", s.column, s.cmp, *s.value);
          },
          [](const TestStep& s) { return fmt::format("test {}: {} by {}", s.test, s.feature, s.outcome); },
          [](const RegressStep& s) {
            std::string rhs = text::join(s.features, " + ");
            if (!s.controls.empty()) rhs += " | controls: " + text::join(s.controls, " + ");
            return fmt::format("regress {} ~ {}", s.outcome, rhs);
          },
      },
      step);
}

std::vector<std::string> created_by(const PlanStep& step) {
  if (const auto* f = std::get_if<FeaturizeStep>(&step)) return {f->spec.name};
  if (const auto* d = std::get_if<DeriveStep>(&step)) return {d->target};
  if (const auto* g = std::get_if<GroupRankStep>(&step)) return {g->target};
  return {};
}

std::string plan_to_jsonl(const ExperimentPlan& plan) {
  std::string out = json{{"plan_version", kPlanVersion}}.dump() + "\n";
  for (const auto& s : plan) out += step_to_json(s).dump() + "\n";
  return out;
}

json plan_to_json(const ExperimentPlan& plan) {
  json arr = json::array();
  for (const auto& s : plan) arr.push_back(step_to_json(s));
  return arr;
}

ExperimentPlan plan_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("plan must be an array of steps");
  ExperimentPlan plan;
  for (const auto& s : j) plan.push_back(step_from_json(s));
  return plan;
}

ExperimentPlan plan_from_text(const std::string& content) {
  const auto trimmed = text::trim(content);
  if (trimmed.empty()) return {};
  if (trimmed.front() == '[') {
    try {
      return plan_from_json(json::parse(trimmed));
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("plan is not valid JSON: {}", e.what()));
    }
  }
  ExperimentPlan plan;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("plan line {}: {}", line_no, e.what()));
    }
    if (j.is_object() && j.contains("plan_version")) {
      if (j["plan_version"] != kPlanVersion) {
        throw ParseError(fmt::format("unsupported plan_version {}", j["plan_version"].dump()));
      }
      continue;
    }
    try {
      plan.push_back(step_from_json(j));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("plan line {}: {}", line_no, e.what()));
    }
  }
  return plan;
}

}  // namespace hypolab::lab
