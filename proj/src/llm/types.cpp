#include "hypolab/llm/types.hpp"

#include <fmt/format.h>

#include "hypolab/common/hash.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::llm {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

Role role_from_string(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  if (name == "tool") return Role::tool;
  throw InvalidArgument(fmt::format("unknown role '{}'", name));
}

void validate_exchange(const ChatExchange& exchange) {
  if (exchange.messages.empty()) throw InvalidArgument("exchange has no messages");
  if (exchange.messages.front().role != Role::system) throw InvalidArgument("first message must be a system message");
  if (!(exchange.temperature >= 0.0)) throw InvalidArgument("temperature must be non-negative");
  for (std::size_t i = 0; i < exchange.messages.size(); ++i) {
    const auto& m = exchange.messages[i];
    if (i > 0 && m.role == Role::system) throw InvalidArgument("system message must come first only");
    if (i > 0 && m.role == Role::assistant && exchange.messages[i - 1].role == Role::assistant) {
      throw InvalidArgument("two consecutive assistant messages");
    }
    if (!m.attachments.empty() && m.role != Role::user) throw InvalidArgument("attachments are allowed on user messages only");
  }
}

json canonical_json(const ChatExchange& exchange) {
  json messages = json::array();
  for (const auto& m : exchange.messages) {
    json jm{{"role", to_string(m.role)}, {"content", m.content}};
    if (!m.attachments.empty()) {
      json atts = json::array();
      for (const auto& a : m.attachments) {
        atts.push_back({{"path", a.path}, {"media_type", a.media_type}, {"sha256", sha256_hex(a.data_base64)}});
      }
      jm["attachments"] = atts;
    }
    messages.push_back(jm);
  }
  return json{{"model", exchange.model},
              {"messages", messages},
              {"temperature", exchange.temperature},
              {"max_output_tokens", exchange.max_output_tokens}};
}

std::string request_hash(const ChatExchange& exchange) { return sha256_hex(canonical_json(exchange).dump()); }

std::string embedding_request_hash(const std::string& model, const std::string& text) {
  return sha256_hex(json{{"kind", "embed"}, {"model", model}, {"input", text}}.dump());
}

std::string prompt_head(const ChatExchange& exchange) {
  if (exchange.messages.empty()) return "";
  std::string s = exchange.messages.back().content;
  for (char& c : s) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  // cut on a code point boundary
  std::string out;
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size() && count < 80; ++count) {
    std::size_t len = 1;
    const auto c = static_cast<unsigned char>(s[i]);
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    out += s.substr(i, len);
    i += len;
  }
  return out;
}

}  // namespace hypolab::llm
