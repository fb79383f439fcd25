#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypolab/data/dataset.hpp"
#include "hypolab/lab/executor.hpp"
#include "hypolab/llm/gateway.hpp"

namespace hypolab::annotate {

using Labels = std::vector<std::optional<std::string>>;

struct AnnotatorOptions {
  std::string model;
  double temperature = 0.0;
  std::filesystem::path cache_path;   // empty keeps the cache in memory only
  std::filesystem::path image_root;   // relative image paths resolve here
  std::size_t concurrency = 8;
  double null_warning_rate = 0.2;
};

struct AnnotationJob {
  lab::FeatureSpec feature;  // llm mode, one source column
  std::vector<std::size_t> rows;
  std::string cache_prefix;
};

struct AnnotationResult {
  Labels labels;  // aligned with job.rows
  std::vector<std::string> warnings;
  std::size_t gateway_calls = 0;
};

/// Canonical allowed label matching `response` after trimming whitespace and
/// surrounding punctuation, compared case-insensitively.
std::optional<std::string> match_label(std::string_view response, const std::vector<std::string>& labels);

/// "{a, b, c}"
std::string format_label_set(const std::vector<std::string>& labels);

llm::ChatExchange text_prompt(const std::string& model, double temperature, std::string_view content,
                              const lab::FeatureSpec& feature);
llm::ChatExchange visual_prompt(const std::string& model, double temperature, const llm::Attachment& image,
                                const lab::FeatureSpec& feature);
/// Follow-up appended after an unparseable answer.
std::string reminder_message(const std::vector<std::string>& labels);

std::string media_type_for(const std::filesystem::path& path);

/// LLM-as-judge labelling with a persistent cache keyed by row content.
class Annotator : public lab::LabelSource {
 public:
  Annotator(llm::Gateway& gateway, AnnotatorOptions options);

  /// Throws Error naming the failed rows when the gateway gives up.
  AnnotationResult annotate(const AnnotationJob& job, const data::Dataset& dataset);
  Result annotate(const lab::FeatureSpec& spec, const data::Dataset& dataset,
                  const std::vector<std::size_t>& rows) override;

  std::size_t gateway_calls() const;
  std::size_t cache_size() const;

 private:
  struct Outcome {
    std::optional<std::string> label;
    std::size_t calls = 0;
    bool failed = false;
    std::string error;
  };
  Outcome ask(const llm::ChatExchange& first, const lab::FeatureSpec& feature);

  llm::Gateway& gateway_;
  AnnotatorOptions options_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::optional<std::string>> cache_;
  std::size_t calls_ = 0;
};

/// Flips each non-null label to the other class with probability
/// `flip_rate`. The labels must take exactly two distinct values.
Labels inject_label_noise(const Labels& labels, double flip_rate, std::uint64_t seed);

/// F1 of `predicted` against `gold` for `positive`; pairs with a null on
/// either side are skipped. Throws when gold has no positive label.
double agreement_f1(const Labels& predicted, const Labels& gold, const std::string& positive);

}  // namespace hypolab::annotate
