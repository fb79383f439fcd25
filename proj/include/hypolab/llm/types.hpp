#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hypolab/common/error.hpp"
#include "hypolab/common/jsonl.hpp"

namespace hypolab::llm {

enum class Role { system, user, assistant, tool };
std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct Attachment {
  std::string path;
  std::string media_type;   // e.g. image/png
  std::string data_base64;  // filled by the caller
};

struct Message {
  Role role = Role::user;
  std::string content;
  std::vector<Attachment> attachments;  // user messages only
};

struct ChatExchange {
  std::string model;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_output_tokens = 2048;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0.0;
  double cost = 0.0;
};

struct Completion {
  std::string text;
  Usage usage;
  std::string request_hash;
  bool replayed = false;
};

/// Checks the structural invariants: non-empty, system first, no two
/// consecutive assistant messages, attachments only on user messages.
void validate_exchange(const ChatExchange& exchange);

/// Canonical form used for hashing. Keys are sorted; attachment payloads
/// are represented by their SHA-256.
json canonical_json(const ChatExchange& exchange);
std::string request_hash(const ChatExchange& exchange);
std::string embedding_request_hash(const std::string& model, const std::string& text);

/// First 80 characters of the last message, for diagnostics.
std::string prompt_head(const ChatExchange& exchange);

class GatewayError : public Error {
 public:
  enum class Kind { authentication, context_length, transient, exhausted, replay_miss, provider };
  GatewayError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace hypolab::llm
