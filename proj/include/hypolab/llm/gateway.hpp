#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypolab/llm/provider.hpp"
#include "hypolab/llm/types.hpp"

namespace hypolab::llm {

enum class TransportMode { live, record, replay };
std::string_view to_string(TransportMode mode);
TransportMode transport_mode_from_string(std::string_view name);

struct Pricing {
  double prompt_per_1k = 0.0;
  double completion_per_1k = 0.0;
};

struct GatewayConfig {
  TransportMode mode = TransportMode::live;
  std::filesystem::path transcript_path;  // required for record and replay
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{1000};
  std::size_t max_in_flight = 8;
  std::map<std::string, Pricing> pricing;  // by model name
  std::function<void(std::chrono::milliseconds)> sleeper;  // defaults to sleep_for
};

struct TranscriptRecord {
  std::string hash;
  std::string kind;  // chat | embed
  std::string model;
  std::string response;
  std::vector<double> embedding;
  Usage usage;
  std::string prompt_head;
};

json to_json(const TranscriptRecord& record);
TranscriptRecord transcript_record_from_json(const json& j);

struct GatewayTotals {
  std::size_t completions = 0;
  std::size_t embeddings = 0;
  std::size_t provider_calls = 0;
  std::size_t retries = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double cost = 0.0;
};

/// Chat and embedding access with retries, accounting, an in-flight limit
/// and record/replay persistence. Safe for concurrent callers.
class Gateway {
 public:
  /// `provider` may be null only in replay mode. Replay requires the
  /// transcript file to exist.
  Gateway(GatewayConfig config, std::shared_ptr<Provider> provider);

  Completion complete(const ChatExchange& exchange);
  /// One L2-normalized vector per text.
  std::vector<std::vector<double>> embed(const std::string& model, const std::vector<std::string>& texts);

  TransportMode mode() const { return config_.mode; }
  GatewayTotals totals() const;

 private:
  template <class F>
  auto with_retries(F&& call) -> decltype(call());
  std::optional<TranscriptRecord> take_replay(const std::string& hash);
  void persist(const TranscriptRecord& record);
  double price(const std::string& model, long prompt_tokens, long completion_tokens) const;

  GatewayConfig config_;
  std::shared_ptr<Provider> provider_;
  std::counting_semaphore<1024> in_flight_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::deque<TranscriptRecord>> replay_;
  std::unordered_map<std::string, TranscriptRecord> replay_last_;
  GatewayTotals totals_;
};

/// L2-normalizes in place; throws on a zero or non-finite vector.
void normalize(std::vector<double>& v);

}  // namespace hypolab::llm
