#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hypolab/data/dataset.hpp"
#include "hypolab/lab/executor.hpp"
#include "hypolab/llm/gateway.hpp"
#include "hypolab/search/bank.hpp"
#include "hypolab/stats/types.hpp"

namespace hypolab::eval {

/// Hypothesis-derived features aligned to a dataset's rows. NaN marks a
/// missing value (null cell or unlabeled row).
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // columns[k][row]
  std::vector<bool> binary;
  std::vector<std::string> hypothesis_ids;   // owner of each column
  std::size_t rows = 0;
  std::vector<std::string> warnings;

  std::optional<std::size_t> index_of(const std::string& name) const;
};

/// Replays each bank entry's column-creating steps (featurize, derive,
/// group_rank) on `dataset` and takes the headline feature. The outcome
/// column is removed first, so nothing here can read labels. Numeric
/// features stay real (binary when only 0/1 occur); two-level categoricals
/// become 0/1; wider categoricals become indicators "<id>=<level>" against
/// the first sorted level. Entries that cannot be replayed are left out
/// with a warning.
FeatureMatrix featurize_by_bank(const data::Dataset& dataset, const search::HypothesisBank& bank,
                                lab::LabelSource* labels, const lab::Budget& budget = {});

/// 0/1 outcome per row (NaN when null). Throws unless the column has
/// exactly two levels.
std::vector<double> binary_outcome(const data::Dataset& dataset, const std::string& column,
                                   const std::optional<std::string>& positive = std::nullopt);

/// The level coded as 1 by binary_outcome.
std::string positive_level(const data::Dataset& dataset, const std::string& column,
                           const std::optional<std::string>& positive = std::nullopt);

struct ColumnDrop {
  std::string name;
  std::string reason;  // "constant", "collinear with <name>", "all missing"
};

/// Drops constant and all-missing columns, then any column whose residual
/// after the earlier kept columns (and the intercept) vanishes.
std::vector<ColumnDrop> prune_columns(FeatureMatrix& matrix);

/// Fills NaN with the given per-column values.
void impute(FeatureMatrix& matrix, const std::vector<double>& fill);
std::vector<double> column_means(const FeatureMatrix& matrix);

struct RegressionInference {
  std::vector<std::string> features;       // columns used, in order
  std::vector<ColumnDrop> dropped;
  stats::RegressionResult fit;
  bool ridge = false;
  std::vector<double> probabilities;       // per test row
  std::vector<int> predictions;            // 1 when probability >= 0.5
  std::optional<double> accuracy;          // over test rows with a label
  std::vector<std::string> warnings;
};

/// Multivariate logistic regression on the training matrix (missing values
/// set to training means) applied to the test matrix. Training rows without
/// a label are skipped. A separated fit is retried with ridge 1e-6; a second
/// failure throws.
RegressionInference regression_infer(const FeatureMatrix& train, const std::vector<double>& train_labels,
                                     const FeatureMatrix& test,
                                     const std::optional<std::vector<double>>& test_labels = std::nullopt);

/// Per-row |y - p| from a fit on the matrix itself, for boosting-style
/// sampling. All zeros when there is nothing to fit.
std::vector<double> boosting_weights(const FeatureMatrix& matrix, const std::vector<double>& labels);

struct ColumnSignificance {
  std::string name;
  std::string hypothesis_id;
  double p = 1.0;
  stats::EffectSize effect;  // odds ratio per unit
  bool significant = false;
};

struct SignificanceCount {
  std::size_t count = 0;
  std::size_t tested = 0;   // Bonferroni divisor
  double alpha = 0.05;
  double threshold = 0.0;
  std::vector<ColumnSignificance> columns;
  std::vector<ColumnDrop> dropped;
  std::size_t n = 0;
  std::vector<std::string> warnings;
};

/// One logistic regression over every surviving column; a column counts
/// when its Wald p < alpha / (columns tested).
SignificanceCount count_significant(const FeatureMatrix& features, const std::vector<double>& outcome,
                                    double alpha = 0.05);

json to_json(const SignificanceCount& s);
/// Counts line, Bonferroni divisor and a per-hypothesis p table.
std::string render_significance(const SignificanceCount& s);

struct TwoStepOptions {
  std::string model;
  std::string task_description;
  std::string outcome;
  std::vector<std::string> labels;
  std::size_t k = 3;
  double temperature = 0.0;
};

struct TwoStepPrediction {
  std::optional<std::string> label;
  std::vector<std::size_t> selected;  // 1-based bank positions
  bool selection_fallback = false;
  std::optional<std::string> error;
};

/// Indices 1..bank_size in the order they appear in the reply, without
/// repeats, cut to k.
std::vector<std::size_t> parse_selection(const std::string& reply, std::size_t bank_size, std::size_t k);

llm::ChatExchange selection_prompt(const std::vector<std::string>& hypotheses, const std::string& example,
                                   const TwoStepOptions& options);
llm::ChatExchange prediction_prompt(const std::vector<std::string>& hypotheses, const std::string& example,
                                    const TwoStepOptions& options);

/// Selection completion (skipped when the bank has at most k entries), then
/// a label completion over the chosen hypotheses. An unusable selection
/// falls back to the first k entries; an unusable label is reported in
/// `error`.
TwoStepPrediction two_step_infer(const std::string& example, const search::HypothesisBank& bank,
                                 llm::Gateway& gateway, const TwoStepOptions& options);

/// two_step_infer over the given rows (rendered as digest sample rows
/// without the outcome column), `concurrency` examples at a time.
std::vector<TwoStepPrediction> two_step_infer_rows(const data::Dataset& dataset, const std::vector<std::size_t>& rows,
                                                   const search::HypothesisBank& bank, llm::Gateway& gateway,
                                                   const TwoStepOptions& options, std::size_t concurrency = 8);

}  // namespace hypolab::eval
