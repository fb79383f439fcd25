#include <cctype>
#include <cstdint>

#include <fmt/format.h>

#include "hypolab/common/jsonl.hpp"
#include "hypolab/llm/provider.hpp"

namespace hypolab::llm {

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
    return out;
  }
  if (!v.is_array()) throw ParseError(fmt::format("script rule field '{}' must be a list of strings", key));
  for (const auto& s : v) out.push_back(s.get<std::string>());
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

long estimate_tokens(const std::string& text) { return static_cast<long>((text.size() + 3) / 4); }

std::vector<double> hashed_embedding(const std::string& text, std::size_t dimension) {
  std::vector<double> v(dimension, 0.0);
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    const auto h = fnv1a(word);
    v[h % dimension] += (h >> 63) ? -1.0 : 1.0;
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) word.push_back(static_cast<char>(std::tolower(c)));
    else flush();
  }
  flush();
  bool all_zero = true;
  for (double x : v) all_zero = all_zero && x == 0.0;
  if (all_zero) v[0] = 1.0;
  return v;
}

ScriptedProvider::ScriptedProvider(const json& script) {
  if (!script.is_object() || !script.contains("rules") || !script.at("rules").is_array()) {
    throw ParseError("script must be an object with a 'rules' array");
  }
  for (const auto& r : script.at("rules")) {
    Rule rule;
    rule.match = string_list(r, "match");
    rule.last = string_list(r, "last");
    rule.responses = string_list(r, "responses");
    if (rule.responses.empty()) throw ParseError("script rule has no responses");
    rules_.push_back(std::move(rule));
  }
  if (script.contains("fallback")) {
    fallback_ = script.at("fallback").get<std::string>();
    has_fallback_ = true;
  }
  if (script.contains("embedding_dim")) {
    dimension_ = script.at("embedding_dim").get<std::size_t>();
    if (dimension_ < 2) throw ParseError("embedding_dim must be at least 2");
  }
}

ScriptedProvider ScriptedProvider::from_file(const std::filesystem::path& path) {
  try {
    return ScriptedProvider(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ProviderReply ScriptedProvider::complete(const ChatExchange& exchange) {
  std::string all;
  for (const auto& m : exchange.messages) {
    all += m.content;
    all += '\n';
  }
  const std::string& last = exchange.messages.empty() ? std::string() : exchange.messages.back().content;
  std::lock_guard lock(mutex_);
  ++calls_;
  for (auto& rule : rules_) {
    bool ok = true;
    for (const auto& s : rule.match) ok = ok && all.find(s) != std::string::npos;
    for (const auto& s : rule.last) ok = ok && last.find(s) != std::string::npos;
    if (!ok) continue;
    const std::size_t idx = std::min(rule.used, rule.responses.size() - 1);
    ++rule.used;
    const auto& text = rule.responses[idx];
    return {text, estimate_tokens(all), estimate_tokens(text)};
  }
  if (has_fallback_) return {fallback_, estimate_tokens(all), estimate_tokens(fallback_)};
  throw GatewayError(GatewayError::Kind::provider,
                     fmt::format("scripted provider has no rule for prompt: {}", prompt_head(exchange)));
}

std::vector<std::vector<double>> ScriptedProvider::embed(const std::string&, const std::vector<std::string>& texts) {
  {
    std::lock_guard lock(mutex_);
    ++calls_;
  }
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hashed_embedding(t, dimension_));
  return out;
}

std::size_t ScriptedProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

}  // namespace hypolab::llm
