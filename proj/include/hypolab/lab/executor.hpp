#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypolab/data/dataset.hpp"
#include "hypolab/lab/plan.hpp"
#include "hypolab/stats/types.hpp"

namespace hypolab::lab {

/// Source of per-row labels for llm-mode featurize steps.
class LabelSource {
 public:
  virtual ~LabelSource() = default;
  struct Result {
    std::vector<std::optional<std::string>> labels;  // one per requested row
    std::vector<std::string> warnings;
  };
  virtual Result annotate(const FeatureSpec& spec, const data::Dataset& dataset,
                          const std::vector<std::size_t>& rows) = 0;
};

struct Budget {
  std::size_t max_steps = 64;
  std::chrono::milliseconds per_step_time_limit{30000};
  std::size_t max_created_columns = 64;
};

/// Cooperative per-step time limit.
class Deadline {
 public:
  explicit Deadline(std::chrono::milliseconds limit)
      : limit_(limit), end_(std::chrono::steady_clock::now() + limit) {}
  bool expired() const { return std::chrono::steady_clock::now() > end_; }
  void check() const;  // throws StepTimeout

 private:
  std::chrono::milliseconds limit_;
  std::chrono::steady_clock::time_point end_;
};

class StepTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepResult {
  std::size_t number = 0;  // 1-based among successful steps of the session
  PlanStep step;
  std::vector<std::string> created;
  std::optional<stats::TestResult> test;
  std::optional<stats::RegressionResult> regression;
  std::size_t rows_remaining = 0;
  std::string summary;  // distribution of a created column over working rows
  std::vector<std::string> warnings;
};

struct StepFailure {
  std::size_t plan_index = 0;  // 0-based within the submitted plan
  std::string message;
};

struct PlanOutcome {
  std::vector<StepResult> steps;
  std::vector<std::string> created_columns;
  std::vector<std::pair<std::size_t, stats::TestResult>> test_results;
  std::vector<std::pair<std::size_t, stats::RegressionResult>> regression_results;
  std::size_t rows_remaining = 0;
  std::vector<std::string> warnings;
  std::optional<StepFailure> failure;  // steps before it keep their effects
};

/// Symbolic check of column creation and use; reports every violation.
std::vector<std::string> validate_plan(const ExperimentPlan& plan,
                                       const std::map<std::string, data::ColumnKind>& schema);

/// 1-based rank within each group in the given row subset; ties keep row
/// order. Rows outside `rows` are null. Throws for non-orderable columns.
std::vector<data::Cell> group_rank(const data::Dataset& dataset, const std::string& group_key,
                                   const std::string& order_by, bool descending,
                                   const std::vector<std::size_t>& rows);
std::vector<data::Cell> group_rank(const data::Dataset& dataset, const std::string& group_key,
                                   const std::string& order_by, bool descending);

/// Binary reading of a column: numeric 0/1, or exactly two categorical levels
/// where the sorted second level (or `positive`, if given) is 1.
struct BinaryCoding {
  std::optional<std::string> positive_level;  // categorical columns
  std::optional<double> encode(const data::Cell& cell) const;
};
std::optional<BinaryCoding> binary_coding(const data::Column& column, const std::vector<std::size_t>& rows,
                                          const std::optional<std::string>& positive = std::nullopt);

/// Runs plans against a dataset, keeping created columns and the active row
/// set between calls.
class PlanSession {
 public:
  PlanSession(data::Dataset dataset, LabelSource* labels, Budget budget = {});

  /// Validates against the current schema, then executes in order, stopping
  /// at the first failing step.
  PlanOutcome run(const ExperimentPlan& plan);

  const data::Dataset& dataset() const { return dataset_; }
  const std::vector<std::size_t>& active_rows() const { return active_; }
  const std::vector<StepResult>& history() const { return history_; }
  ExperimentPlan executed_plan() const;
  const StepResult* find_step(std::size_t number) const;

 private:
  StepResult execute(const PlanStep& step, const Deadline& deadline);

  data::Dataset dataset_;
  LabelSource* labels_;
  Budget budget_;
  std::vector<std::size_t> active_;
  std::vector<StepResult> history_;
  std::size_t created_count_ = 0;
  std::size_t attempted_ = 0;
};

PlanOutcome execute_plan(const ExperimentPlan& plan, const data::Dataset& dataset, LabelSource* labels,
                         const Budget& budget = {});

/// Compact text rendering of step results for an agent's tool message.
std::string describe_outcome(const PlanOutcome& outcome);
std::string describe_result(const StepResult& step);

json step_result_to_json(const StepResult& r);

}  // namespace hypolab::lab
