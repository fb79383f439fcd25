#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hypolab/agents/report.hpp"
#include "hypolab/data/sampling.hpp"

namespace hypolab::search {

struct SearchConfig {
  std::size_t outer_iterations = 10;  // N
  std::size_t refinement_steps = 4;   // T
  std::size_t bank_capacity = 20;     // K
  double alpha = 0.05;
  data::SamplingStrategy sampling;
  std::uint64_t rng_seed = 0;
  bool novelty_clause = true;

  double threshold() const { return alpha / static_cast<double>(refinement_steps); }
};

/// Throws InvalidArgument when an invariant fails.
void validate(const SearchConfig& config);
json to_json(const SearchConfig& config);

struct HypothesisRecord {
  std::string id;  // "h003-2" = outer iteration 3, refinement 2
  std::string text;
  std::string request;
  std::size_t seed_index = 0;        // i
  std::size_t refinement_index = 0;  // j
  agents::AnalysisReport report;
  bool accepted = false;
  std::size_t accepted_order = 0;  // 1-based order of entry into the bank
  std::vector<double> embedding;
};

std::string record_id(std::size_t i, std::size_t j);

json to_json(const HypothesisRecord& r);
HypothesisRecord record_from_json(const json& j);

struct HypothesisBank {
  std::vector<HypothesisRecord> entries;
  std::size_t capacity = 20;

  std::vector<std::string> texts() const;
  bool contains_text(const std::string& text) const;
};

inline constexpr int kBankVersion = 1;

/// Header line {"bank_version":1,"capacity":K,...} followed by one line per
/// entry, in bank order.
void save_bank(const std::filesystem::path& path, const HypothesisBank& bank, const SearchConfig& config);
HypothesisBank load_bank(const std::filesystem::path& path);

/// Index into `candidates` of the record to accept: testing-mode entries
/// with a supported verdict and headline p < alpha / T, preferring larger
/// support_n, then smaller p, then earlier j.
std::optional<std::size_t> select_accepted(const std::vector<HypothesisRecord>& candidates, double alpha,
                                           std::size_t refinement_steps);
/// Same rule over session memory (entry k has j = k + 1).
std::optional<std::size_t> select_accepted(const agents::SessionMemory& memory, double alpha,
                                           std::size_t refinement_steps);

/// 1 - cosine similarity of two unit vectors, clamped to [0, 2].
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Indices kept by greedy farthest-point selection (sorted ascending).
std::vector<std::size_t> farthest_point_selection(const std::vector<std::vector<double>>& points, std::size_t keep);

/// Keeps at most `capacity` entries, chosen by farthest-point selection
/// under cosine distance; kept entries stay in acceptance order.
HypothesisBank prune_bank(const HypothesisBank& bank);

/// Minimum cosine distance to any bank embedding; 2.0 for an empty bank.
double novelty_score(const std::vector<double>& candidate, const HypothesisBank& bank);

}  // namespace hypolab::search
