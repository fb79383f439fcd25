#include "hypolab/agents/generator.hpp"

#include <fmt/format.h>

#include "hypolab/agents/prompts.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::agents {

std::vector<std::string_view> json_object_spans(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto open = s.find('{', pos);
    if (open == std::string_view::npos) break;
    int depth = 0;
    bool in_string = false, escaped = false;
    std::size_t k = open;
    for (; k < s.size(); ++k) {
      const char c = s[k];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) break;
    }
    if (k >= s.size()) {
      pos = open + 1;  // unbalanced; try a later brace
      continue;
    }
    out.push_back(s.substr(open, k - open + 1));
    pos = k + 1;
  }
  return out;
}

namespace {

std::optional<bool> as_flag(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto t = text::to_lower(text::trim(v.get<std::string>()));
    if (t == "true") return true;
    if (t == "false") return false;
  }
  return std::nullopt;
}

std::optional<GeneratorProposal> try_object(std::string_view span) {
  json j;
  try {
    j = json::parse(span);
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
  if (!j.is_object()) return std::nullopt;
  const auto h = j.find("hypothesis");
  const auto r = j.find("request");
  const auto t = j.find("test");
  if (h == j.end() || r == j.end() || t == j.end() || !h->is_string() || !r->is_string()) return std::nullopt;
  auto flag = as_flag(*t);
  if (!flag) return std::nullopt;
  GeneratorProposal p{std::string(text::trim(h->get<std::string>())), std::string(text::trim(r->get<std::string>())),
                      *flag};
  if (p.hypothesis.empty() || p.request.empty()) return std::nullopt;
  return p;
}

}  // namespace

GeneratorProposal parse_proposal(std::string_view response) {
  for (auto span : json_object_spans(response)) {
    if (auto p = try_object(span)) return *p;
    // the object may be nested inside a wrapper
    for (auto inner : json_object_spans(span.substr(1, span.size() - 2))) {
      if (auto p = try_object(inner)) return *p;
    }
  }
  throw ParseError("no object with string \"hypothesis\", string \"request\" and boolean \"test\" keys");
}

GeneratorProposal request_proposal(llm::Gateway& gateway, const llm::ChatExchange& exchange,
                                   const ExchangeObserver& observer) {
  auto reply = gateway.complete(exchange);
  if (observer) observer("generator", exchange, reply);
  try {
    return parse_proposal(reply.text);
  } catch (const ParseError&) {
  }
  auto repair = exchange;
  repair.messages.push_back({llm::Role::assistant, reply.text, {}});
  repair.messages.push_back({llm::Role::user, proposal_repair_message(), {}});
  auto second = gateway.complete(repair);
  if (observer) observer("generator", repair, second);
  try {
    return parse_proposal(second.text);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("generator reply unreadable after repair: {}", e.what()));
  }
}

}  // namespace hypolab::agents
