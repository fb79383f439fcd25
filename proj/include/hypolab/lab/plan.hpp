#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hypolab/common/jsonl.hpp"

namespace hypolab::lab {

struct FeatureSpec {
  enum class Mode { programmatic, llm };
  std::string name;
  std::string description;
  Mode mode = Mode::programmatic;
  std::vector<std::string> source_columns;
  std::string featurizer;          // programmatic
  json params = json::object();    // programmatic
  std::vector<std::string> labels; // llm

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct FeaturizeStep {
  FeatureSpec spec;
  friend bool operator==(const FeaturizeStep&, const FeaturizeStep&) = default;
};

struct DeriveStep {
  std::string target;
  std::string expr;
  friend bool operator==(const DeriveStep&, const DeriveStep&) = default;
};

struct GroupRankStep {
  std::string target;
  std::string group_key;
  std::string order_by;
  bool descending = false;
  friend bool operator==(const GroupRankStep&, const GroupRankStep&) = default;
};

// Keeps rows where `column cmp threshold`. The threshold is a constant, a
// quantile of the column over the current working rows, or (for == and !=
// on categorical columns) a text level.
struct FilterStep {
  std::string column;
  std::string cmp;  // < <= > >= == !=
  std::optional<double> value;
  std::optional<double> quantile;
  std::optional<std::string> level;
  friend bool operator==(const FilterStep&, const FilterStep&) = default;
};

struct TestStep {
  std::string test;  // welch_t | mann_whitney | chi_square | two_proportion
  std::string feature;
  std::string outcome;
  std::optional<std::string> positive;  // outcome level treated as 1
  friend bool operator==(const TestStep&, const TestStep&) = default;
};

struct RegressStep {
  std::string outcome;
  std::vector<std::string> features;
  std::vector<std::string> controls;
  std::optional<std::string> positive;
  friend bool operator==(const RegressStep&, const RegressStep&) = default;
};

using PlanStep = std::variant<FeaturizeStep, DeriveStep, GroupRankStep, FilterStep, TestStep, RegressStep>;
using ExperimentPlan = std::vector<PlanStep>;

inline constexpr int kPlanVersion = 1;

json to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const json& j);

json step_to_json(const PlanStep& step);
/// Throws ParseError on unknown ops or missing fields.
PlanStep step_from_json(const json& j);

/// Short human-readable form, e.g. "test welch_t: text_length by label".
std::string describe_step(const PlanStep& step);

/// Columns a step creates (empty for filter/test/regress).
std::vector<std::string> created_by(const PlanStep& step);

/// Line-record form: {"plan_version":1} then one step object per line.
std::string plan_to_jsonl(const ExperimentPlan& plan);
/// Accepts the versioned line form, a bare JSON array of steps, or bare step
/// lines.
ExperimentPlan plan_from_text(const std::string& text);

json plan_to_json(const ExperimentPlan& plan);  // array of steps
ExperimentPlan plan_from_json(const json& j);

}  // namespace hypolab::lab
