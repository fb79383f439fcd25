#include "hypolab/eval/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "hypolab/annotate/annotator.hpp"
#include "hypolab/common/error.hpp"
#include "hypolab/common/log.hpp"
#include "hypolab/common/text.hpp"
#include "hypolab/data/digest.hpp"
#include "hypolab/stats/effect.hpp"
#include "hypolab/stats/logistic.hpp"
#include "hypolab/stats/multiple_testing.hpp"

namespace hypolab::eval {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRidge = 1e-6;

// Column the hypothesis is about: the tested feature of the headline step,
// or the first regressor.
std::optional<std::string> headline_feature(const agents::AnalysisReport& report) {
  const lab::PlanStep* step = nullptr;
  if (report.headline && report.headline->step >= 1 && report.headline->step <= report.plan.size()) {
    step = &report.plan[report.headline->step - 1];
  } else {
    for (auto it = report.plan.rbegin(); it != report.plan.rend(); ++it) {
      if (std::holds_alternative<lab::TestStep>(*it) || std::holds_alternative<lab::RegressStep>(*it)) {
        step = &*it;
        break;
      }
    }
  }
  if (!step) return std::nullopt;
  if (const auto* t = std::get_if<lab::TestStep>(step)) return t->feature;
  if (const auto* r = std::get_if<lab::RegressStep>(step); r && !r->features.empty()) return r->features.front();
  return std::nullopt;
}

struct Encoded {
  std::vector<std::string> suffixes;  // "" for a single column
  std::vector<std::vector<double>> columns;
  std::vector<bool> binary;
};

Encoded encode(const data::Column& column) {
  const std::size_t n = column.values.size();
  Encoded out;
  if (column.kind == data::ColumnKind::numeric || column.kind == data::ColumnKind::timestamp) {
    std::vector<double> v(n, kNaN);
    bool binary = true;
    for (std::size_t r = 0; r < n; ++r) {
      if (auto x = data::as_number(column.values[r])) {
        v[r] = *x;
        binary = binary && (*x == 0.0 || *x == 1.0);
      }
    }
    out.suffixes.push_back("");
    out.columns.push_back(std::move(v));
    out.binary.push_back(binary);
    return out;
  }
  std::set<std::string> levels;
  for (const auto& c : column.values) {
    if (const auto* s = data::as_text(c)) levels.insert(*s);
  }
  if (levels.size() <= 2) {
    // one or two levels: 0/1 with the sorted last level as 1
    const std::string positive = levels.empty() ? "" : *levels.rbegin();
    std::vector<double> v(n, kNaN);
    for (std::size_t r = 0; r < n; ++r) {
      if (const auto* s = data::as_text(column.values[r])) v[r] = *s == positive ? 1.0 : 0.0;
    }
    out.suffixes.push_back("");
    out.columns.push_back(std::move(v));
    out.binary.push_back(true);
    return out;
  }
  for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
    std::vector<double> v(n, kNaN);
    for (std::size_t r = 0; r < n; ++r) {
      if (const auto* s = data::as_text(column.values[r])) v[r] = *s == *it ? 1.0 : 0.0;
    }
    out.suffixes.push_back("=" + *it);
    out.columns.push_back(std::move(v));
    out.binary.push_back(true);
  }
  return out;
}

stats::DesignMatrix design_of(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
  stats::DesignMatrix d;
  d.names = m.names;
  for (const auto& col : m.columns) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (std::size_t r : rows) v.push_back(col[r]);
    d.columns.push_back(std::move(v));
  }
  return d;
}

std::vector<std::size_t> labeled_rows(const std::vector<double>& y) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (!std::isnan(y[r])) rows.push_back(r);
  }
  return rows;
}

stats::RegressionResult fit(const stats::DesignMatrix& x, const std::vector<double>& y, bool& ridge,
                            std::vector<std::string>& warnings) {
  ridge = false;
  stats::RegressionResult r;
  try {
    r = stats::logistic_regression(x, y);
  } catch (const Error& e) {
    throw Error(fmt::format("logistic regression on {} rows, {} columns failed: {}", y.size(), x.names.size(),
                            e.what()));
  }
  if (r.converged) return r;
  stats::LogisticOptions options;
  options.ridge_penalty = kRidge;
  try {
    r = stats::logistic_regression(x, y, options);
  } catch (const Error& e) {
    throw Error(fmt::format("ridge refit on {} rows, {} columns failed: {}", y.size(), x.names.size(), e.what()));
  }
  if (!r.converged) {
    throw Error(fmt::format("logistic regression did not converge on {} rows, {} columns (ridge {} after {} iterations)",
                            y.size(), x.names.size(), kRidge, r.iterations));
  }
  ridge = true;
  warnings.push_back(fmt::format("separation: refit with ridge penalty {}", kRidge));
  return r;
}

void keep_columns(FeatureMatrix& m, const std::vector<std::size_t>& keep) {
  FeatureMatrix out;
  out.rows = m.rows;
  out.warnings = std::move(m.warnings);
  for (std::size_t k : keep) {
    out.names.push_back(m.names[k]);
    out.columns.push_back(std::move(m.columns[k]));
    out.binary.push_back(m.binary[k]);
    out.hypothesis_ids.push_back(m.hypothesis_ids[k]);
  }
  m = std::move(out);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::optional<std::size_t> FeatureMatrix::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

FeatureMatrix featurize_by_bank(const data::Dataset& dataset, const search::HypothesisBank& bank,
                                lab::LabelSource* labels, const lab::Budget& budget) {
  std::vector<data::Column> columns;
  for (const auto& c : dataset.columns()) {
    if (dataset.outcome_column() && c.name == *dataset.outcome_column()) continue;
    columns.push_back(c);
  }
  const data::Dataset features_only(std::move(columns));

  FeatureMatrix m;
  m.rows = dataset.row_count();
  for (const auto& entry : bank.entries) {
    const auto feature = headline_feature(entry.report);
    if (!feature) {
      m.warnings.push_back(fmt::format("{}: no tested feature recorded; omitted", entry.id));
      continue;
    }
    lab::ExperimentPlan creating;
    for (const auto& step : entry.report.plan) {
      if (!lab::created_by(step).empty()) creating.push_back(step);
    }
    lab::PlanSession session(features_only, labels, budget);
    const auto outcome = session.run(creating);
    if (outcome.failure) {
      m.warnings.push_back(fmt::format("{}: omitted, feature step {} failed: {}", entry.id,
                                       outcome.failure->plan_index + 1, outcome.failure->message));
      continue;
    }
    for (const auto& w : outcome.warnings) m.warnings.push_back(fmt::format("{}: {}", entry.id, w));
    if (!session.dataset().has_column(*feature)) {
      m.warnings.push_back(fmt::format("{}: omitted, column '{}' is not available in this dataset", entry.id, *feature));
      continue;
    }
    const auto& column = session.dataset().column(*feature);
    if (column.kind == data::ColumnKind::text || column.kind == data::ColumnKind::image_path) {
      m.warnings.push_back(fmt::format("{}: omitted, column '{}' is free text", entry.id, *feature));
      continue;
    }
    auto enc = encode(column);
    for (std::size_t k = 0; k < enc.columns.size(); ++k) {
      m.names.push_back(entry.id + enc.suffixes[k]);
      m.columns.push_back(std::move(enc.columns[k]));
      m.binary.push_back(enc.binary[k]);
      m.hypothesis_ids.push_back(entry.id);
    }
  }
  for (const auto& w : m.warnings) log_warning(w);
  return m;
}

std::string positive_level(const data::Dataset& dataset, const std::string& column,
                           const std::optional<std::string>& positive) {
  const auto& c = dataset.column(column);
  std::vector<std::size_t> all(dataset.row_count());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  auto coding = lab::binary_coding(c, all, positive);
  if (!coding) {
    throw InvalidArgument(fmt::format("outcome '{}' must have exactly two levels{}", column,
                                      positive ? fmt::format(" including '{}'", *positive) : ""));
  }
  return coding->positive_level ? *coding->positive_level : "1";
}

std::vector<double> binary_outcome(const data::Dataset& dataset, const std::string& column,
                                   const std::optional<std::string>& positive) {
  const auto& c = dataset.column(column);
  std::vector<std::size_t> all(dataset.row_count());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  auto coding = lab::binary_coding(c, all, positive);
  if (!coding) throw InvalidArgument(fmt::format("outcome '{}' must have exactly two levels", column));
  std::vector<double> y(c.values.size(), kNaN);
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (auto v = coding->encode(c.values[r])) y[r] = *v;
  }
  return y;
}

std::vector<double> column_means(const FeatureMatrix& matrix) {
  std::vector<double> means;
  for (const auto& col : matrix.columns) {
    double s = 0;
    std::size_t n = 0;
    for (double v : col) {
      if (!std::isnan(v)) {
        s += v;
        ++n;
      }
    }
    means.push_back(n ? s / static_cast<double>(n) : kNaN);
  }
  return means;
}

void impute(FeatureMatrix& matrix, const std::vector<double>& fill) {
  for (std::size_t k = 0; k < matrix.columns.size(); ++k) {
    for (double& v : matrix.columns[k]) {
      if (std::isnan(v)) v = fill[k];
    }
  }
}

std::vector<ColumnDrop> prune_columns(FeatureMatrix& matrix) {
  std::vector<ColumnDrop> dropped;
  FeatureMatrix filled = matrix;
  impute(filled, column_means(filled));

  std::vector<std::size_t> keep;
  std::vector<std::vector<double>> basis;  // orthonormal, centered
  for (std::size_t k = 0; k < filled.columns.size(); ++k) {
    const auto& col = filled.columns[k];
    if (col.empty() || std::isnan(col.front())) {
      dropped.push_back({matrix.names[k], "all missing"});
      continue;
    }
    double mean = 0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    std::vector<double> c(col.size());
    for (std::size_t r = 0; r < col.size(); ++r) c[r] = col[r] - mean;
    const double norm0 = dot(c, c);
    if (norm0 <= 1e-12 * static_cast<double>(col.size()) * std::max(1.0, mean * mean)) {
      dropped.push_back({matrix.names[k], "constant"});
      continue;
    }
    std::size_t strongest = 0;
    double strongest_proj = -1;
    for (std::size_t b = 0; b < basis.size(); ++b) {
      const double proj = dot(basis[b], c);
      if (std::abs(proj) > strongest_proj) {
        strongest_proj = std::abs(proj);
        strongest = b;
      }
      for (std::size_t r = 0; r < c.size(); ++r) c[r] -= proj * basis[b][r];
    }
    const double residual = dot(c, c);
    if (residual <= 1e-9 * norm0) {
      dropped.push_back({matrix.names[k], fmt::format("collinear with {}", matrix.names[keep[strongest]])});
      continue;
    }
    const double scale = 1.0 / std::sqrt(residual);
    for (double& v : c) v *= scale;
    basis.push_back(std::move(c));
    keep.push_back(k);
  }
  for (const auto& d : dropped) matrix.warnings.push_back(fmt::format("dropped {}: {}", d.name, d.reason));
  keep_columns(matrix, keep);
  return dropped;
}

RegressionInference regression_infer(const FeatureMatrix& train, const std::vector<double>& train_labels,
                                     const FeatureMatrix& test, const std::optional<std::vector<double>>& test_labels) {
  if (train_labels.size() != train.rows) throw InvalidArgument("training labels do not match the training rows");
  if (test_labels && test_labels->size() != test.rows) throw InvalidArgument("test labels do not match the test rows");
  std::vector<std::string> missing;
  for (const auto& name : train.names) {
    if (!test.index_of(name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    throw InvalidArgument(fmt::format("test features lack training columns: {}", text::join(missing, ", ")));
  }

  RegressionInference out;
  const auto rows = labeled_rows(train_labels);
  if (rows.empty()) throw InvalidArgument("no labeled training rows");

  FeatureMatrix x;
  x.rows = rows.size();
  x.names = train.names;
  x.binary = train.binary;
  x.hypothesis_ids = train.hypothesis_ids;
  for (const auto& col : train.columns) {
    std::vector<double> v;
    for (std::size_t r : rows) v.push_back(col[r]);
    x.columns.push_back(std::move(v));
  }
  std::vector<double> y;
  for (std::size_t r : rows) y.push_back(train_labels[r]);

  out.dropped = prune_columns(x);
  for (const auto& d : out.dropped) out.warnings.push_back(fmt::format("dropped {}: {}", d.name, d.reason));
  const auto means = column_means(x);
  impute(x, means);
  std::vector<std::size_t> all(x.rows);
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  out.features = x.names;
  out.fit = fit(design_of(x, all), y, out.ridge, out.warnings);

  std::size_t correct = 0, scored = 0;
  for (std::size_t r = 0; r < test.rows; ++r) {
    double eta = out.fit.coefficients.front().beta;
    for (std::size_t k = 0; k < x.names.size(); ++k) {
      double v = test.columns[*test.index_of(x.names[k])][r];
      if (std::isnan(v)) v = means[k];
      eta += out.fit.coefficients[k + 1].beta * v;
    }
    const double p = 1.0 / (1.0 + std::exp(-eta));
    out.probabilities.push_back(p);
    out.predictions.push_back(p >= 0.5 ? 1 : 0);
    if (test_labels && !std::isnan((*test_labels)[r])) {
      ++scored;
      correct += out.predictions.back() == static_cast<int>((*test_labels)[r]);
    }
  }
  if (scored) out.accuracy = static_cast<double>(correct) / static_cast<double>(scored);
  return out;
}

std::vector<double> boosting_weights(const FeatureMatrix& matrix, const std::vector<double>& labels) {
  std::vector<double> w(matrix.rows, 0.0);
  if (matrix.columns.empty()) return w;
  try {
    const auto r = regression_infer(matrix, labels, matrix);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!std::isnan(labels[i])) w[i] = std::abs(labels[i] - r.probabilities[i]);
    }
  } catch (const InvalidArgument&) {
    throw;
  } catch (const Error& e) {
    log_warning(fmt::format("boosting weights unavailable: {}", e.what()));
    std::fill(w.begin(), w.end(), 0.0);
  }
  return w;
}

SignificanceCount count_significant(const FeatureMatrix& features, const std::vector<double>& outcome, double alpha) {
  if (outcome.size() != features.rows) throw InvalidArgument("outcome does not match the feature rows");
  SignificanceCount out;
  out.alpha = alpha;
  const auto rows = labeled_rows(outcome);

  FeatureMatrix x;
  x.rows = rows.size();
  x.names = features.names;
  x.binary = features.binary;
  x.hypothesis_ids = features.hypothesis_ids;
  for (const auto& col : features.columns) {
    std::vector<double> v;
    for (std::size_t r : rows) v.push_back(col[r]);
    x.columns.push_back(std::move(v));
  }
  std::vector<double> y;
  for (std::size_t r : rows) y.push_back(outcome[r]);

  out.dropped = prune_columns(x);
  for (const auto& d : out.dropped) {
    out.warnings.push_back(fmt::format("{} {} dropped", d.reason == "constant" ? "constant column" : "column", d.name) +
                           (d.reason == "constant" ? "" : fmt::format(" ({})", d.reason)));
  }
  if (x.names.empty()) throw InvalidArgument("no usable feature columns to test");
  impute(x, column_means(x));
  std::vector<std::size_t> all(x.rows);
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  bool ridge = false;
  const auto r = fit(design_of(x, all), y, ridge, out.warnings);
  out.n = r.n;
  out.tested = x.names.size();
  out.threshold = stats::bonferroni_threshold(alpha, out.tested);
  for (std::size_t k = 0; k < x.names.size(); ++k) {
    const auto& c = r.coefficients[k + 1];
    ColumnSignificance s;
    s.name = x.names[k];
    s.hypothesis_id = x.hypothesis_ids[k];
    s.p = c.p;
    s.effect = {stats::EffectKind::odds_ratio, std::exp(c.beta), std::exp(c.beta - 1.959963984540054 * c.std_err),
                std::exp(c.beta + 1.959963984540054 * c.std_err)};
    s.significant = c.p < out.threshold;
    out.count += s.significant;
    out.columns.push_back(std::move(s));
  }
  for (const auto& w : r.warnings) out.warnings.push_back(w);
  return out;
}

json to_json(const SignificanceCount& s) {
  json cols = json::array();
  for (const auto& c : s.columns) {
    json e;
    stats::to_json(e, c.effect);
    cols.push_back({{"name", c.name},
                    {"hypothesis", c.hypothesis_id},
                    {"p", c.p},
                    {"effect", e},
                    {"magnitude", stats::to_string(stats::describe_effect(c.effect))},
                    {"significant", c.significant}});
  }
  json dropped = json::array();
  for (const auto& d : s.dropped) dropped.push_back({{"name", d.name}, {"reason", d.reason}});
  return {{"significant", s.count}, {"tested", s.tested}, {"alpha", s.alpha}, {"threshold", s.threshold},
          {"n", s.n},           {"columns", cols},     {"dropped", dropped}, {"warnings", s.warnings}};
}

std::string render_significance(const SignificanceCount& s) {
  std::string out = fmt::format("Significant: {} of {} tested (n = {})\n", s.count, s.tested, s.n);
  out += fmt::format("Bonferroni threshold: {} / {} = {}\n", s.alpha, s.tested, s.threshold);
  out += "\n| feature | p | odds ratio | magnitude | significant |\n|---|---|---|---|---|\n";
  for (const auto& c : s.columns) {
    out += fmt::format("| {} | {:.3g} | {:.3f} | {} | {} |\n", c.name, c.p, c.effect.value,
                       stats::to_string(stats::describe_effect(c.effect)), c.significant ? "yes" : "no");
  }
  for (const auto& d : s.dropped) out += fmt::format("\nDropped {}: {}", d.name, d.reason);
  if (!s.dropped.empty()) out += '\n';
  return out;
}

std::vector<std::size_t> parse_selection(const std::string& reply, std::size_t bank_size, std::size_t k) {
  std::vector<std::size_t> out;
  std::size_t i = 0;
  while (i < reply.size() && out.size() < k) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    // "3.5" or "h001-1" digits are not list positions
    const bool decimal = j + 1 < reply.size() && reply[j] == '.' && std::isdigit(static_cast<unsigned char>(reply[j + 1]));
    const bool embedded = i > 0 && (std::isalpha(static_cast<unsigned char>(reply[i - 1])) || reply[i - 1] == '-');
    if (!decimal && !embedded && j - i <= 6) {
      const std::size_t v = std::stoul(reply.substr(i, j - i));
      if (v >= 1 && v <= bank_size && std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    i = j;
    if (decimal) {
      ++i;
      while (i < reply.size() && std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
    }
  }
  return out;
}

llm::ChatExchange selection_prompt(const std::vector<std::string>& hypotheses, const std::string& example,
                                   const TwoStepOptions& options) {
  std::string list;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) list += fmt::format("{}. {}\n", i + 1, hypotheses[i]);
  llm::ChatExchange ex;
  ex.model = options.model;
  ex.temperature = options.temperature;
  ex.messages.push_back({llm::Role::system,
                         fmt::format("{}\nYou use previously validated hypotheses to predict the {} of new examples.",
                                     options.task_description, options.outcome),
                         {}});
  ex.messages.push_back(
      {llm::Role::user,
       fmt::format("Hypotheses:\n{}\nExample:\n{}\nWhich {} hypotheses are most relevant for predicting the {} of this "
                   "example? Reply with their numbers only, comma-separated, most relevant first.",
                   list, example, options.k, options.outcome),
       {}});
  return ex;
}

llm::ChatExchange prediction_prompt(const std::vector<std::string>& hypotheses, const std::string& example,
                                    const TwoStepOptions& options) {
  std::string list;
  for (const auto& h : hypotheses) list += fmt::format("- {}\n", h);
  llm::ChatExchange ex;
  ex.model = options.model;
  ex.temperature = options.temperature;
  ex.messages.push_back({llm::Role::system,
                         fmt::format("{}\nYou use previously validated hypotheses to predict the {} of new examples.",
                                     options.task_description, options.outcome),
                         {}});
  ex.messages.push_back(
      {llm::Role::user,
       fmt::format("Relevant hypotheses:\n{}\nExample:\n{}\nUsing these hypotheses, predict the {} of this example. "
                   "Answer with exactly one of {} and nothing else.",
                   list, example, options.outcome, annotate::format_label_set(options.labels)),
       {}});
  return ex;
}

namespace {

std::optional<std::string> read_label(const std::string& reply, const std::vector<std::string>& labels) {
  if (auto m = annotate::match_label(reply, labels)) return m;
  const auto lines = text::split(std::string(text::trim(reply)), '\n');
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto line = std::string(text::trim(*it));
    if (line.empty()) continue;
    if (auto colon = line.rfind(':'); colon != std::string::npos) line = line.substr(colon + 1);
    return annotate::match_label(line, labels);
  }
  return std::nullopt;
}

}  // namespace

TwoStepPrediction two_step_infer(const std::string& example, const search::HypothesisBank& bank, llm::Gateway& gateway,
                                 const TwoStepOptions& options) {
  if (bank.entries.empty()) throw InvalidArgument("two-step inference needs a non-empty bank");
  if (options.k == 0) throw InvalidArgument("k must be at least 1");
  if (options.labels.empty()) throw InvalidArgument("two-step inference needs the task's label set");
  const auto texts = bank.texts();
  TwoStepPrediction out;
  if (texts.size() <= options.k) {
    for (std::size_t i = 1; i <= texts.size(); ++i) out.selected.push_back(i);
  } else {
    const auto reply = gateway.complete(selection_prompt(texts, example, options));
    out.selected = parse_selection(reply.text, texts.size(), options.k);
    if (out.selected.empty()) {
      out.selection_fallback = true;
      for (std::size_t i = 1; i <= options.k; ++i) out.selected.push_back(i);
      log_warning(fmt::format("unusable hypothesis selection \"{}\"; using the first {}",
                              text::truncate_utf8(reply.text, 60), options.k));
    }
  }
  std::vector<std::string> chosen;
  for (std::size_t i : out.selected) chosen.push_back(texts[i - 1]);
  const auto reply = gateway.complete(prediction_prompt(chosen, example, options));
  out.label = read_label(reply.text, options.labels);
  if (!out.label) {
    out.error = fmt::format("no label from {} in \"{}\"", annotate::format_label_set(options.labels),
                            text::truncate_utf8(reply.text, 80));
  }
  return out;
}

std::vector<TwoStepPrediction> two_step_infer_rows(const data::Dataset& dataset, const std::vector<std::size_t>& rows,
                                                   const search::HypothesisBank& bank, llm::Gateway& gateway,
                                                   const TwoStepOptions& options, std::size_t concurrency) {
  std::set<std::string> exclude;
  if (dataset.outcome_column()) exclude.insert(*dataset.outcome_column());
  if (!options.outcome.empty()) exclude.insert(options.outcome);
  std::vector<std::string> examples;
  for (std::size_t r : rows) examples.push_back(data::render_rows_table(dataset, {r}, exclude));

  std::vector<TwoStepPrediction> out(rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < examples.size(); i = next++) {
      try {
        out[i] = two_step_infer(examples[i], bank, gateway, options);
      } catch (const Error& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(concurrency, examples.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace hypolab::eval
