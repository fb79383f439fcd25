#include "hypolab/llm/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/log.hpp"

namespace hypolab::llm {

std::string_view to_string(TransportMode mode) {
  switch (mode) {
    case TransportMode::live: return "live";
    case TransportMode::record: return "record";
    case TransportMode::replay: return "replay";
  }
  return "live";
}

TransportMode transport_mode_from_string(std::string_view name) {
  if (name == "live") return TransportMode::live;
  if (name == "record") return TransportMode::record;
  if (name == "replay") return TransportMode::replay;
  throw InvalidArgument(fmt::format("unknown transport '{}' (expected live, record or replay)", name));
}

json to_json(const TranscriptRecord& r) {
  json j{{"v", 1},
         {"hash", r.hash},
         {"kind", r.kind},
         {"model", r.model},
         {"prompt_tokens", r.usage.prompt_tokens},
         {"completion_tokens", r.usage.completion_tokens},
         {"latency_ms", r.usage.latency_ms},
         {"cost", r.usage.cost},
         {"prompt_head", r.prompt_head}};
  if (r.kind == "embed") j["embedding"] = r.embedding;
  else j["response"] = r.response;
  return j;
}

TranscriptRecord transcript_record_from_json(const json& j) {
  TranscriptRecord r;
  r.hash = j.at("hash").get<std::string>();
  r.kind = j.value("kind", std::string("chat"));
  r.model = j.value("model", std::string());
  if (r.kind == "embed") r.embedding = j.at("embedding").get<std::vector<double>>();
  else r.response = j.at("response").get<std::string>();
  r.usage.prompt_tokens = j.value("prompt_tokens", 0L);
  r.usage.completion_tokens = j.value("completion_tokens", 0L);
  r.usage.latency_ms = j.value("latency_ms", 0.0);
  r.usage.cost = j.value("cost", 0.0);
  r.prompt_head = j.value("prompt_head", std::string());
  return r;
}

void normalize(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double norm = std::sqrt(ss);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw GatewayError(GatewayError::Kind::provider, "embedding has zero or non-finite norm");
  for (double& x : v) x /= norm;
}

Gateway::Gateway(GatewayConfig config, std::shared_ptr<Provider> provider)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 1024))) {
  if (config_.max_attempts < 1) throw InvalidArgument("max_attempts must be at least 1");
  if (!config_.sleeper) config_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (config_.mode == TransportMode::replay) {
    if (config_.transcript_path.empty() || !std::filesystem::exists(config_.transcript_path)) {
      throw InvalidArgument(fmt::format("replay transport needs an existing transcript store (got '{}')",
                                        config_.transcript_path.string()));
    }
    for (const auto& j : read_jsonl(config_.transcript_path)) {
      auto rec = transcript_record_from_json(j);
      replay_[rec.hash].push_back(rec);
    }
    return;
  }
  if (!provider_) throw InvalidArgument("live and record transports need a provider");
  if (config_.mode == TransportMode::record) {
    if (config_.transcript_path.empty()) throw InvalidArgument("record transport needs a transcript path");
    if (config_.transcript_path.has_parent_path()) std::filesystem::create_directories(config_.transcript_path.parent_path());
  }
}

GatewayTotals Gateway::totals() const {
  std::lock_guard lock(mutex_);
  return totals_;
}

double Gateway::price(const std::string& model, long prompt_tokens, long completion_tokens) const {
  const auto it = config_.pricing.find(model);
  if (it == config_.pricing.end()) return 0.0;
  return it->second.prompt_per_1k * static_cast<double>(prompt_tokens) / 1000.0 +
         it->second.completion_per_1k * static_cast<double>(completion_tokens) / 1000.0;
}

std::optional<TranscriptRecord> Gateway::take_replay(const std::string& hash) {
  std::lock_guard lock(mutex_);
  auto it = replay_.find(hash);
  if (it != replay_.end() && !it->second.empty()) {
    auto rec = it->second.front();
    it->second.pop_front();
    replay_last_[hash] = rec;
    return rec;
  }
  // a request repeated more often than recorded gets the last answer again
  if (auto last = replay_last_.find(hash); last != replay_last_.end()) return last->second;
  return std::nullopt;
}

void Gateway::persist(const TranscriptRecord& record) {
  if (config_.mode != TransportMode::record) return;
  std::lock_guard lock(mutex_);
  append_jsonl(config_.transcript_path, to_json(record));
}

template <class F>
auto Gateway::with_retries(F&& call) -> decltype(call()) {
  for (int attempt = 1;; ++attempt) {
    in_flight_.acquire();
    try {
      {
        std::lock_guard lock(mutex_);
        ++totals_.provider_calls;
      }
      auto result = call();
      in_flight_.release();
      return result;
    } catch (const GatewayError& e) {
      in_flight_.release();
      if (e.kind() != GatewayError::Kind::transient) throw;
      if (attempt >= config_.max_attempts) {
        throw GatewayError(GatewayError::Kind::exhausted,
                           fmt::format("gave up after {} attempts: {}", attempt, e.what()));
      }
      const auto wait = config_.base_backoff * (1LL << (attempt - 1));
      log_warning(fmt::format("transient provider failure ({}), retrying in {} ms", e.what(), wait.count()));
      {
        std::lock_guard lock(mutex_);
        ++totals_.retries;
      }
      config_.sleeper(wait);
    } catch (...) {
      in_flight_.release();
      throw;
    }
  }
}

Completion Gateway::complete(const ChatExchange& exchange) {
  validate_exchange(exchange);
  Completion out;
  out.request_hash = request_hash(exchange);
  if (config_.mode == TransportMode::replay) {
    auto rec = take_replay(out.request_hash);
    if (!rec || rec->kind != "chat") {
      throw GatewayError(GatewayError::Kind::replay_miss,
                         fmt::format("replay miss: no transcript record for request {} (prompt: \"{}\")",
                                     out.request_hash, prompt_head(exchange)));
    }
    out.text = rec->response;
    out.usage = rec->usage;
    out.usage.cost = 0.0;
    out.replayed = true;
    std::lock_guard lock(mutex_);
    ++totals_.completions;
    totals_.prompt_tokens += out.usage.prompt_tokens;
    totals_.completion_tokens += out.usage.completion_tokens;
    return out;
  }

  const auto start = std::chrono::steady_clock::now();
  const ProviderReply reply = with_retries([&] { return provider_->complete(exchange); });
  const auto stop = std::chrono::steady_clock::now();

  out.text = reply.text;
  long prompt_chars = 0;
  for (const auto& m : exchange.messages) prompt_chars += static_cast<long>(m.content.size());
  out.usage.prompt_tokens = reply.prompt_tokens >= 0 ? reply.prompt_tokens : (prompt_chars + 3) / 4;
  out.usage.completion_tokens = reply.completion_tokens >= 0 ? reply.completion_tokens : estimate_tokens(reply.text);
  out.usage.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  out.usage.cost = price(exchange.model, out.usage.prompt_tokens, out.usage.completion_tokens);

  persist(TranscriptRecord{out.request_hash, "chat", exchange.model, out.text, {}, out.usage, prompt_head(exchange)});
  std::lock_guard lock(mutex_);
  ++totals_.completions;
  totals_.prompt_tokens += out.usage.prompt_tokens;
  totals_.completion_tokens += out.usage.completion_tokens;
  totals_.cost += out.usage.cost;
  return out;
}

std::vector<std::vector<double>> Gateway::embed(const std::string& model, const std::vector<std::string>& texts) {
  if (texts.empty()) throw InvalidArgument("embed needs at least one text");
  for (const auto& t : texts) {
    if (t.empty()) throw InvalidArgument("embed texts must be non-empty");
  }
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());

  if (config_.mode == TransportMode::replay) {
    for (const auto& t : texts) {
      const auto hash = embedding_request_hash(model, t);
      auto rec = take_replay(hash);
      if (!rec || rec->kind != "embed") {
        throw GatewayError(GatewayError::Kind::replay_miss,
                           fmt::format("replay miss: no transcript record for request {} (prompt: \"{}\")", hash,
                                       t.substr(0, 80)));
      }
      out.push_back(rec->embedding);
    }
  } else {
    const auto start = std::chrono::steady_clock::now();
    auto vectors = with_retries([&] { return provider_->embed(model, texts); });
    const auto stop = std::chrono::steady_clock::now();
    if (vectors.size() != texts.size()) throw GatewayError(GatewayError::Kind::provider, "provider returned wrong number of embeddings");
    const double latency = std::chrono::duration<double, std::milli>(stop - start).count() / static_cast<double>(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      normalize(vectors[i]);
      Usage usage;
      usage.prompt_tokens = estimate_tokens(texts[i]);
      usage.latency_ms = latency;
      usage.cost = price(model, usage.prompt_tokens, 0);
      persist(TranscriptRecord{embedding_request_hash(model, texts[i]), "embed", model, {}, vectors[i], usage,
                               texts[i].substr(0, 80)});
      std::lock_guard lock(mutex_);
      totals_.cost += usage.cost;
    }
    out = std::move(vectors);
  }
  for (auto& v : out) normalize(v);
  if (!out.empty()) {
    for (const auto& v : out) {
      if (v.size() != out.front().size()) throw GatewayError(GatewayError::Kind::provider, "embeddings differ in dimension");
    }
  }
  std::lock_guard lock(mutex_);
  totals_.embeddings += texts.size();
  return out;
}

}  // namespace hypolab::llm
