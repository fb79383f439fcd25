#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "hypolab/llm/types.hpp"

namespace hypolab::llm {

struct ProviderReply {
  std::string text;
  long prompt_tokens = -1;  // -1 when the provider does not report usage
  long completion_tokens = -1;
};

/// A backend that answers chat and embedding requests. Implementations
/// signal failures with GatewayError (transient ones are retried).
class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply complete(const ChatExchange& exchange) = 0;
  virtual std::vector<std::vector<double>> embed(const std::string& model, const std::vector<std::string>& texts) = 0;
};

struct HttpSettings {
  std::string base_url;
  std::string api_key;
  int timeout_seconds = 120;
};

inline constexpr const char* kApiKeyVariable = "HYPOLAB_API_KEY";
inline constexpr const char* kBaseUrlVariable = "HYPOLAB_BASE_URL";
inline constexpr const char* kDefaultBaseUrl = "https://api.openai.com/v1";

/// Reads the credential and base URL from the environment. Throws an
/// authentication GatewayError when the key is absent or empty.
HttpSettings http_settings_from_environment();

/// Chat-completions style JSON over HTTP(S).
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpSettings settings);
  ProviderReply complete(const ChatExchange& exchange) override;
  std::vector<std::vector<double>> embed(const std::string& model, const std::vector<std::string>& texts) override;

  static json request_body(const ChatExchange& exchange);

 private:
  json post(const std::string& path, const json& body);
  HttpSettings settings_;
};

/// Deterministic offline provider driven by a rule file:
///   {"rules": [{"match": [...], "last": [...], "responses": [...]}], "embedding_dim": 64}
/// A rule applies when every "match" substring occurs somewhere in the
/// exchange and every "last" substring occurs in the final message. The
/// first applicable rule answers; its responses are used in order and the
/// final one repeats. Embeddings use a signed hashing trick over words.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(const json& script);
  static ScriptedProvider from_file(const std::filesystem::path& path);

  ProviderReply complete(const ChatExchange& exchange) override;
  std::vector<std::vector<double>> embed(const std::string& model, const std::vector<std::string>& texts) override;

  std::size_t calls() const;

 private:
  struct Rule {
    std::vector<std::string> match;
    std::vector<std::string> last;
    std::vector<std::string> responses;
    std::size_t used = 0;
  };
  std::vector<Rule> rules_;
  std::string fallback_;
  bool has_fallback_ = false;
  std::size_t dimension_ = 64;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
};

/// Word-hashing embedding used by the scripted provider (not normalized).
std::vector<double> hashed_embedding(const std::string& text, std::size_t dimension);

/// Rough token estimate for providers that report no usage.
long estimate_tokens(const std::string& text);

}  // namespace hypolab::llm
