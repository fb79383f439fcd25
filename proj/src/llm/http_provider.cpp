#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <regex>

#include <fmt/format.h>

#include "hypolab/llm/provider.hpp"

namespace hypolab::llm {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw InvalidArgument(fmt::format("invalid base URL '{}'", url));
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

}  // namespace

HttpSettings http_settings_from_environment() {
  HttpSettings s;
  const char* key = std::getenv(kApiKeyVariable);
  if (key == nullptr || *key == '\0') {
    throw GatewayError(GatewayError::Kind::authentication,
                       fmt::format("environment variable {} is not set", kApiKeyVariable));
  }
  s.api_key = key;
  const char* base = std::getenv(kBaseUrlVariable);
  s.base_url = (base != nullptr && *base != '\0') ? base : kDefaultBaseUrl;
  return s;
}

HttpProvider::HttpProvider(HttpSettings settings) : settings_(std::move(settings)) {
  if (settings_.api_key.empty()) throw GatewayError(GatewayError::Kind::authentication, "API key is empty");
  split_url(settings_.base_url);
}

json HttpProvider::request_body(const ChatExchange& exchange) {
  json messages = json::array();
  for (const auto& m : exchange.messages) {
    // tool output goes back as a user turn; no function-calling schema
    const std::string role = m.role == Role::tool ? "user" : std::string(to_string(m.role));
    if (m.attachments.empty()) {
      messages.push_back({{"role", role}, {"content", m.content}});
      continue;
    }
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", m.content}});
    for (const auto& a : m.attachments) {
      parts.push_back({{"type", "image_url"},
                       {"image_url", {{"url", fmt::format("data:{};base64,{}", a.media_type, a.data_base64)}}}});
    }
    messages.push_back({{"role", role}, {"content", parts}});
  }
  return json{{"model", exchange.model},
              {"messages", messages},
              {"temperature", exchange.temperature},
              {"max_tokens", exchange.max_output_tokens}};
}

json HttpProvider::post(const std::string& path, const json& body) {
  const auto url = split_url(settings_.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(settings_.timeout_seconds, 0);
  client.set_read_timeout(settings_.timeout_seconds, 0);
  client.set_bearer_token_auth(settings_.api_key);
  auto res = client.Post(url.prefix + path, body.dump(), "application/json");
  if (!res) {
    throw GatewayError(GatewayError::Kind::transient,
                       fmt::format("request failed: {}", httplib::to_string(res.error())));
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw GatewayError(GatewayError::Kind::authentication, fmt::format("provider rejected credentials (HTTP {})", status));
  }
  if (status == 429 || status >= 500) {
    throw GatewayError(GatewayError::Kind::transient, fmt::format("provider returned HTTP {}", status));
  }
  if (status >= 400) {
    const auto& b = res->body;
    if (b.find("context_length") != std::string::npos || b.find("maximum context") != std::string::npos) {
      throw GatewayError(GatewayError::Kind::context_length, "context length exceeded");
    }
    throw GatewayError(GatewayError::Kind::provider, fmt::format("provider returned HTTP {}: {}", status, b.substr(0, 300)));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw GatewayError(GatewayError::Kind::provider, fmt::format("malformed provider response: {}", e.what()));
  }
}

ProviderReply HttpProvider::complete(const ChatExchange& exchange) {
  const json reply = post("/chat/completions", request_body(exchange));
  ProviderReply out;
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    out.text = content.is_null() ? "" : content.get<std::string>();
    if (reply.contains("usage")) {
      const auto& u = reply.at("usage");
      out.prompt_tokens = u.value("prompt_tokens", -1L);
      out.completion_tokens = u.value("completion_tokens", -1L);
    }
  } catch (const json::exception& e) {
    throw GatewayError(GatewayError::Kind::provider, fmt::format("unexpected completion shape: {}", e.what()));
  }
  return out;
}

std::vector<std::vector<double>> HttpProvider::embed(const std::string& model, const std::vector<std::string>& texts) {
  const json reply = post("/embeddings", json{{"model", model}, {"input", texts}});
  std::vector<std::vector<double>> out(texts.size());
  try {
    for (const auto& item : reply.at("data")) {
      const auto idx = item.value("index", std::size_t{0});
      if (idx >= out.size()) throw GatewayError(GatewayError::Kind::provider, "embedding index out of range");
      out[idx] = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw GatewayError(GatewayError::Kind::provider, fmt::format("unexpected embedding shape: {}", e.what()));
  }
  for (const auto& v : out) {
    if (v.empty()) throw GatewayError(GatewayError::Kind::provider, "provider omitted an embedding");
  }
  return out;
}

}  // namespace hypolab::llm
