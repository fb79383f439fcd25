#include "hypolab/search/bank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hypolab/common/error.hpp"
#include "hypolab/common/jsonl.hpp"

namespace hypolab::search {

void validate(const SearchConfig& c) {
  if (c.outer_iterations < 1) throw InvalidArgument("iterations must be at least 1");
  if (c.refinement_steps < 1) throw InvalidArgument("refinements must be at least 1");
  if (c.bank_capacity < 1) throw InvalidArgument("capacity must be at least 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
  if (c.sampling.kind != data::SamplingStrategy::Kind::none && c.sampling.k < 1) {
    throw InvalidArgument("sampling size must be at least 1");
  }
}

json to_json(const SearchConfig& c) {
  return json{{"iterations", c.outer_iterations}, {"refinements", c.refinement_steps},
              {"capacity", c.bank_capacity},      {"alpha", c.alpha},
              {"sampling", c.sampling.to_string()}, {"seed", c.rng_seed},
              {"novelty_clause", c.novelty_clause}};
}

std::string record_id(std::size_t i, std::size_t j) { return fmt::format("h{:03}-{}", i, j); }

json to_json(const HypothesisRecord& r) {
  return json{{"id", r.id},
              {"text", r.text},
              {"request", r.request},
              {"seed_index", r.seed_index},
              {"refinement_index", r.refinement_index},
              {"accepted", r.accepted},
              {"accepted_order", r.accepted_order},
              {"evidence", agents::summarize_report(r.report)},
              {"report", agents::to_json(r.report)},
              {"embedding", r.embedding}};
}

HypothesisRecord record_from_json(const json& j) {
  HypothesisRecord r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.request = j.value("request", "");
  r.seed_index = j.at("seed_index").get<std::size_t>();
  r.refinement_index = j.at("refinement_index").get<std::size_t>();
  r.accepted = j.value("accepted", false);
  r.accepted_order = j.value("accepted_order", std::size_t{0});
  r.report = agents::report_from_json(j.at("report"));
  r.embedding = j.value("embedding", std::vector<double>{});
  return r;
}

std::vector<std::string> HypothesisBank::texts() const {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.text);
  return out;
}

bool HypothesisBank::contains_text(const std::string& text) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.text == text; });
}

void save_bank(const std::filesystem::path& path, const HypothesisBank& bank, const SearchConfig& config) {
  std::vector<json> lines;
  lines.push_back(json{{"bank_version", kBankVersion},
                       {"capacity", bank.capacity},
                       {"alpha", config.alpha},
                       {"refinements", config.refinement_steps},
                       {"threshold", config.threshold()},
                       {"entries", bank.entries.size()}});
  for (const auto& e : bank.entries) lines.push_back(to_json(e));
  write_jsonl(path, lines);
}

HypothesisBank load_bank(const std::filesystem::path& path) {
  const auto lines = read_jsonl(path);
  if (lines.empty() || !lines.front().contains("bank_version")) {
    throw ParseError(fmt::format("{}: missing bank header", path.string()));
  }
  const auto& header = lines.front();
  if (header.at("bank_version") != kBankVersion) {
    throw ParseError(fmt::format("{}: unsupported bank_version {}", path.string(), header.at("bank_version").dump()));
  }
  HypothesisBank bank;
  bank.capacity = header.at("capacity").get<std::size_t>();
  for (std::size_t k = 1; k < lines.size(); ++k) {
    try {
      bank.entries.push_back(record_from_json(lines[k]));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}: entry {}: {}", path.string(), k, e.what()));
    }
  }
  return bank;
}

namespace {

struct Candidate {
  std::size_t index;
  std::size_t support;
  double p;
  std::size_t j;
};

std::optional<std::size_t> best_of(std::vector<Candidate> c) {
  if (c.empty()) return std::nullopt;
  std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
    if (a.support != b.support) return a.support > b.support;
    if (a.p != b.p) return a.p < b.p;
    return a.j < b.j;
  });
  return c.front().index;
}

bool eligible(const agents::AnalysisReport& r, double threshold) {
  return r.test_mode && r.verdict == agents::Verdict::supported && r.headline && r.headline->p < threshold;
}

}  // namespace

std::optional<std::size_t> select_accepted(const std::vector<HypothesisRecord>& candidates, double alpha,
                                           std::size_t refinement_steps) {
  const double threshold = alpha / static_cast<double>(refinement_steps);
  std::vector<Candidate> c;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& r = candidates[k].report;
    if (eligible(r, threshold)) c.push_back({k, r.support_n(), r.headline->p, candidates[k].refinement_index});
  }
  return best_of(std::move(c));
}

std::optional<std::size_t> select_accepted(const agents::SessionMemory& memory, double alpha,
                                           std::size_t refinement_steps) {
  const double threshold = alpha / static_cast<double>(refinement_steps);
  std::vector<Candidate> c;
  for (std::size_t k = 0; k < memory.entries.size(); ++k) {
    const auto& r = memory.entries[k].report;
    if (eligible(r, threshold)) c.push_back({k, r.support_n(), r.headline->p, k + 1});
  }
  return best_of(std::move(c));
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidArgument("embeddings differ in dimension");
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
  return std::clamp(1.0 - dot, 0.0, 2.0);
}

std::vector<std::size_t> farthest_point_selection(const std::vector<std::vector<double>>& points, std::size_t keep) {
  const std::size_t n = points.size();
  std::vector<std::size_t> all(n);
  for (std::size_t k = 0; k < n; ++k) all[k] = k;
  if (n <= keep) return all;
  if (keep == 0) return {};
  if (keep == 1) return {0};

  std::size_t a = 0, b = 1;
  double best = -1.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const double d = cosine_distance(points[x], points[y]);
      if (d > best) {
        best = d;
        a = x;
        b = y;
      }
    }
  }
  std::vector<std::size_t> chosen{a, b};
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  for (std::size_t x = 0; x < n; ++x) {
    min_dist[x] = std::min(cosine_distance(points[x], points[a]), cosine_distance(points[x], points[b]));
  }
  std::vector<bool> taken(n, false);
  taken[a] = taken[b] = true;
  while (chosen.size() < keep) {
    std::size_t pick = n;
    for (std::size_t x = 0; x < n; ++x) {
      if (!taken[x] && (pick == n || min_dist[x] > min_dist[pick])) pick = x;
    }
    taken[pick] = true;
    chosen.push_back(pick);
    for (std::size_t x = 0; x < n; ++x) min_dist[x] = std::min(min_dist[x], cosine_distance(points[x], points[pick]));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

HypothesisBank prune_bank(const HypothesisBank& bank) {
  if (bank.entries.size() <= bank.capacity) return bank;
  std::vector<std::vector<double>> points;
  for (const auto& e : bank.entries) {
    if (e.embedding.empty()) throw InvalidArgument(fmt::format("bank entry {} has no embedding", e.id));
    points.push_back(e.embedding);
  }
  HypothesisBank out;
  out.capacity = bank.capacity;
  for (std::size_t k : farthest_point_selection(points, bank.capacity)) out.entries.push_back(bank.entries[k]);
  return out;
}

double novelty_score(const std::vector<double>& candidate, const HypothesisBank& bank) {
  double best = 2.0;
  for (const auto& e : bank.entries) {
    if (e.embedding.empty()) throw InvalidArgument(fmt::format("bank entry {} has no embedding", e.id));
    best = std::min(best, cosine_distance(candidate, e.embedding));
  }
  return best;
}

}  // namespace hypolab::search
