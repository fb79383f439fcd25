#include "hypolab/lab/executor.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <set>

#include "hypolab/common/error.hpp"
#include "hypolab/common/text.hpp"
#include "hypolab/data/digest.hpp"
#include "hypolab/lab/expression.hpp"
#include "hypolab/lab/featurizers.hpp"
#include "hypolab/stats/hypothesis_tests.hpp"
#include "hypolab/stats/logistic.hpp"

namespace hypolab::lab {

using data::Cell;
using data::Column;
using data::ColumnKind;

void Deadline::check() const {
  if (expired()) throw StepTimeout(fmt::format("step exceeded the time limit of {} ms", limit_.count()));
}

namespace {

bool orderable(ColumnKind k) { return k == ColumnKind::numeric || k == ColumnKind::timestamp; }
bool levelled(ColumnKind k) { return k == ColumnKind::categorical || k == ColumnKind::numeric; }

const std::set<std::string> kTests = {"welch_t", "mann_whitney", "chi_square", "two_proportion"};
const std::set<std::string> kComparisons = {"<", "<=", ">", ">=", "==", "!="};

bool compare(double a, const std::string& cmp, double b) {
  if (cmp == "<") return a < b;
  if (cmp == "<=") return a <= b;
  if (cmp == ">") return a > b;
  if (cmp == ">=") return a >= b;
  if (cmp == "==") return a == b;
  return a != b;
}

std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.4g}", v);
}

}  // namespace

std::optional<double> BinaryCoding::encode(const Cell& cell) const {
  if (data::is_null(cell)) return std::nullopt;
  if (positive_level) {
    const auto* s = data::as_text(cell);
    if (!s) return std::nullopt;
    return *s == *positive_level ? 1.0 : 0.0;
  }
  return data::as_number(cell);
}

std::optional<BinaryCoding> binary_coding(const Column& column, const std::vector<std::size_t>& rows,
                                          const std::optional<std::string>& positive) {
  if (column.kind == ColumnKind::numeric) {
    for (std::size_t r : rows) {
      auto v = data::as_number(column.values[r]);
      if (v && *v != 0.0 && *v != 1.0) return std::nullopt;
    }
    return BinaryCoding{};
  }
  if (column.kind != ColumnKind::categorical && column.kind != ColumnKind::text) return std::nullopt;
  std::set<std::string> levels;
  for (std::size_t r : rows) {
    if (const auto* s = data::as_text(column.values[r])) levels.insert(*s);
    if (levels.size() > 2) return std::nullopt;
  }
  if (levels.size() != 2) return std::nullopt;
  if (positive) {
    if (!levels.count(*positive)) return std::nullopt;
    return BinaryCoding{*positive};
  }
  return BinaryCoding{*levels.rbegin()};
}

std::vector<Cell> group_rank(const data::Dataset& dataset, const std::string& group_key, const std::string& order_by,
                             bool descending, const std::vector<std::size_t>& rows) {
  const auto& key = dataset.column(group_key);
  const auto& order = dataset.column(order_by);
  if (!orderable(order.kind)) {
    throw InvalidArgument(fmt::format("group_rank: column '{}' of kind {} is not orderable", order_by,
                                      to_string(order.kind)));
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r : rows) {
    if (data::is_null(key.values[r]) || data::is_null(order.values[r])) continue;
    groups[data::render_cell(key.values[r], key.kind)].push_back(r);
  }
  std::vector<Cell> out(dataset.row_count());
  for (auto& [k, members] : groups) {
    std::sort(members.begin(), members.end());
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const double va = *data::as_number(order.values[a]);
      const double vb = *data::as_number(order.values[b]);
      return descending ? va > vb : va < vb;
    });
    for (std::size_t i = 0; i < members.size(); ++i) out[members[i]] = static_cast<double>(i + 1);
  }
  return out;
}

std::vector<Cell> group_rank(const data::Dataset& dataset, const std::string& group_key, const std::string& order_by,
                             bool descending) {
  std::vector<std::size_t> all(dataset.row_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return group_rank(dataset, group_key, order_by, descending, all);
}

std::vector<std::string> validate_plan(const ExperimentPlan& plan,
                                       const std::map<std::string, ColumnKind>& initial) {
  std::vector<std::string> errors;
  auto schema = initial;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::size_t before = errors.size();
    auto err = [&](const std::string& m) { errors.push_back(fmt::format("step {}: {}", i + 1, m)); };
    auto kind_of = [&](const std::string& c) -> std::optional<ColumnKind> {
      auto it = schema.find(c);
      if (it == schema.end()) {
        err(fmt::format("unknown column '{}'", c));
        return std::nullopt;
      }
      return it->second;
    };
    auto new_name = [&](const std::string& c) {
      if (c.empty()) err("target name must be non-empty");
      else if (schema.count(c)) err(fmt::format("column '{}' already exists", c));
    };
    const auto& step = plan[i];
    if (const auto* f = std::get_if<FeaturizeStep>(&step)) {
      const auto& s = f->spec;
      new_name(s.name);
      if (s.mode == FeatureSpec::Mode::programmatic) {
        for (const auto& e : check_featurizer(s.featurizer, s.params, s.source_columns, schema)) err(e);
      } else {
        std::set<std::string> distinct(s.labels.begin(), s.labels.end());
        if (distinct.size() < 2) err("llm featurize needs at least 2 distinct labels");
        for (const auto& l : s.labels) {
          if (text::utf8_length(l) > 40 || text::trim(l).empty()) err(fmt::format("label '{}' must be 1-40 characters", l));
        }
        if (s.source_columns.size() != 1) err("llm featurize takes exactly one source column");
        for (const auto& c : s.source_columns) {
          if (auto k = kind_of(c); k && *k != ColumnKind::text && *k != ColumnKind::image_path &&
                                   *k != ColumnKind::categorical) {
            err(fmt::format("llm featurize needs a text or image_path column, '{}' is {}", c, to_string(*k)));
          }
        }
      }
      if (errors.size() == before) {
        schema[s.name] = s.mode == FeatureSpec::Mode::llm ? ColumnKind::categorical : ColumnKind::numeric;
      }
    } else if (const auto* d = std::get_if<DeriveStep>(&step)) {
      new_name(d->target);
      try {
        const auto e = Expression::parse(d->expr);
        for (const auto& c : e.columns()) {
          if (auto k = kind_of(c); k && !orderable(*k)) {
            err(fmt::format("expression uses '{}' of kind {}, expected numeric or timestamp", c, to_string(*k)));
          }
        }
      } catch (const ParseError& e) {
        err(e.what());
      }
      if (errors.size() == before) schema[d->target] = ColumnKind::numeric;
    } else if (const auto* g = std::get_if<GroupRankStep>(&step)) {
      new_name(g->target);
      kind_of(g->group_key);
      if (auto k = kind_of(g->order_by); k && !orderable(*k)) {
        err(fmt::format("group_rank cannot order by '{}' of kind {}", g->order_by, to_string(*k)));
      }
      if (errors.size() == before) schema[g->target] = ColumnKind::numeric;
    } else if (const auto* f = std::get_if<FilterStep>(&step)) {
      if (!kComparisons.count(f->cmp)) err(fmt::format("unknown comparison '{}'", f->cmp));
      if (auto k = kind_of(f->column)) {
        if (f->level) {
          if (f->cmp != "==" && f->cmp != "!=") err("level filters support only == and !=");
          if (orderable(*k)) err(fmt::format("level filter on numeric column '{}'; use a numeric value", f->column));
        } else if (!orderable(*k)) {
          err(fmt::format("numeric filter on '{}' of kind {}", f->column, to_string(*k)));
        }
      }
      if (f->quantile && !(*f->quantile >= 0.0 && *f->quantile <= 1.0)) err("quantile must be in [0, 1]");
    } else if (const auto* t = std::get_if<TestStep>(&step)) {
      if (!kTests.count(t->test)) err(fmt::format("unknown test '{}'", t->test));
      auto fk = kind_of(t->feature);
      auto ok = kind_of(t->outcome);
      if (fk && ok) {
        if ((t->test == "welch_t" || t->test == "mann_whitney") && !orderable(*fk)) {
          err(fmt::format("non-numeric feature '{}' for {}", t->feature, t->test));
        }
        if (t->test == "chi_square" || t->test == "two_proportion") {
          if (!levelled(*fk)) err(fmt::format("{} needs a categorical or numeric feature, '{}' is {}", t->test, t->feature, to_string(*fk)));
          if (!levelled(*ok)) err(fmt::format("{} needs a categorical or numeric outcome, '{}' is {}", t->test, t->outcome, to_string(*ok)));
        }
      }
    } else if (const auto* r = std::get_if<RegressStep>(&step)) {
      if (auto k = kind_of(r->outcome); k && !levelled(*k)) err(fmt::format("outcome '{}' must be binary", r->outcome));
      if (r->features.empty()) err("regress needs at least one feature");
      std::set<std::string> seen{r->outcome};
      for (const auto* list : {&r->features, &r->controls}) {
        for (const auto& c : *list) {
          if (!seen.insert(c).second) err(fmt::format("column '{}' listed twice", c));
          if (auto k = kind_of(c); k && *k != ColumnKind::numeric && *k != ColumnKind::timestamp &&
                                   *k != ColumnKind::categorical) {
            err(fmt::format("regressor '{}' of kind {} is not supported", c, to_string(*k)));
          }
        }
      }
    }
  }
  return errors;
}

PlanSession::PlanSession(data::Dataset dataset, LabelSource* labels, Budget budget)
    : dataset_(std::move(dataset)), labels_(labels), budget_(budget), active_(dataset_.row_count()) {
  std::iota(active_.begin(), active_.end(), std::size_t{0});
}

ExperimentPlan PlanSession::executed_plan() const {
  ExperimentPlan plan;
  for (const auto& s : history_) plan.push_back(s.step);
  return plan;
}

const StepResult* PlanSession::find_step(std::size_t number) const {
  if (number == 0 || number > history_.size()) return nullptr;
  return &history_[number - 1];
}

namespace {

stats::TestResult run_test(const data::Dataset& d, const std::vector<std::size_t>& rows, const TestStep& t) {
  const auto& f = d.column(t.feature);
  const auto& o = d.column(t.outcome);
  if (t.test == "welch_t" || t.test == "mann_whitney") {
    std::vector<double> a, b;
    if (auto oc = binary_coding(o, rows, t.positive)) {
      for (std::size_t r : rows) {
        auto y = oc->encode(o.values[r]);
        auto x = data::as_number(f.values[r]);
        if (!y || !x) continue;
        (*y == 1.0 ? a : b).push_back(*x);
      }
    } else if (auto fc = binary_coding(f, rows); fc && orderable(o.kind)) {
      for (std::size_t r : rows) {
        auto g = fc->encode(f.values[r]);
        auto y = data::as_number(o.values[r]);
        if (!g || !y) continue;
        (*g == 1.0 ? a : b).push_back(*y);
      }
    } else {
      throw InvalidArgument(fmt::format("{} needs a binary outcome (or a binary feature with a numeric outcome); "
                                        "'{}' has more than two levels in the working rows",
                                        t.test, t.outcome));
    }
    return t.test == "welch_t" ? stats::welch_t_test(a, b) : stats::mann_whitney_u(a, b);
  }
  if (t.test == "two_proportion") {
    auto fc = binary_coding(f, rows);
    auto oc = binary_coding(o, rows, t.positive);
    if (!fc) throw InvalidArgument(fmt::format("two_proportion needs a binary feature; '{}' is not", t.feature));
    if (!oc) throw InvalidArgument(fmt::format("two_proportion needs a binary outcome; '{}' is not", t.outcome));
    std::uint64_t x1 = 0, n1 = 0, x2 = 0, n2 = 0;
    for (std::size_t r : rows) {
      auto g = fc->encode(f.values[r]);
      auto y = oc->encode(o.values[r]);
      if (!g || !y) continue;
      if (*g == 1.0) {
        ++n1;
        x1 += *y == 1.0;
      } else {
        ++n2;
        x2 += *y == 1.0;
      }
    }
    if (n1 == 0 || n2 == 0) throw InvalidArgument("two_proportion: one feature group is empty in the working rows");
    return stats::two_proportion_z(x1, n1, x2, n2);
  }
  // chi_square
  struct Level {
    std::optional<double> num;
    std::string text;
    bool operator<(const Level& other) const {
      if (num && other.num) return *num < *other.num;
      return text < other.text;
    }
  };
  auto level = [](const Column& c, const Cell& cell) {
    return Level{data::as_number(cell), data::render_cell(cell, c.kind)};
  };
  std::map<Level, std::size_t> fl, ol;
  std::vector<std::pair<Level, Level>> pairs;
  for (std::size_t r : rows) {
    if (data::is_null(f.values[r]) || data::is_null(o.values[r])) continue;
    pairs.emplace_back(level(f, f.values[r]), level(o, o.values[r]));
    fl.emplace(pairs.back().first, 0);
    ol.emplace(pairs.back().second, 0);
  }
  if (fl.size() > 50 || ol.size() > 50) throw InvalidArgument("chi_square: more than 50 levels; bin the column first");
  if (fl.size() < 2 || ol.size() < 2) throw InvalidArgument("chi_square: feature and outcome need at least 2 levels each");
  std::size_t i = 0;
  for (auto& [k, v] : fl) v = i++;
  i = 0;
  for (auto& [k, v] : ol) v = i++;
  std::vector<std::vector<double>> table(fl.size(), std::vector<double>(ol.size(), 0.0));
  for (const auto& [a, b] : pairs) table[fl[a]][ol[b]] += 1.0;
  return stats::chi_square_independence(table);
}

stats::RegressionResult run_regress(const data::Dataset& d, const std::vector<std::size_t>& active,
                                    const RegressStep& s) {
  const auto& o = d.column(s.outcome);
  std::vector<const Column*> regressors;
  for (const auto* list : {&s.features, &s.controls}) {
    for (const auto& c : *list) regressors.push_back(&d.column(c));
  }
  std::vector<std::size_t> rows;
  for (std::size_t r : active) {
    if (data::is_null(o.values[r])) continue;
    if (std::any_of(regressors.begin(), regressors.end(), [&](const Column* c) { return data::is_null(c->values[r]); })) {
      continue;
    }
    rows.push_back(r);
  }
  auto oc = binary_coding(o, rows, s.positive);
  if (!oc) throw InvalidArgument(fmt::format("regress needs a binary outcome; '{}' is not", s.outcome));
  stats::DesignMatrix x;
  for (const Column* c : regressors) {
    if (c->kind == ColumnKind::categorical) {
      std::set<std::string> levels;
      for (std::size_t r : rows) levels.insert(*data::as_text(c->values[r]));
      if (levels.size() < 2) throw InvalidArgument(fmt::format("regressor '{}' has a single level", c->name));
      for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
        x.names.push_back(fmt::format("{}[{}]", c->name, *it));
        std::vector<double> col;
        for (std::size_t r : rows) col.push_back(*data::as_text(c->values[r]) == *it ? 1.0 : 0.0);
        x.columns.push_back(std::move(col));
      }
    } else {
      x.names.push_back(c->name);
      std::vector<double> col;
      for (std::size_t r : rows) col.push_back(*data::as_number(c->values[r]));
      x.columns.push_back(std::move(col));
    }
  }
  std::vector<double> y;
  for (std::size_t r : rows) y.push_back(*oc->encode(o.values[r]));
  return stats::logistic_regression(x, y);
}

std::string column_profile(const Column& c, const std::vector<std::size_t>& rows) {
  std::size_t nulls = 0;
  if (c.kind == ColumnKind::categorical) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t r : rows) {
      if (const auto* s = data::as_text(c.values[r])) ++counts[*s];
      else ++nulls;
    }
    std::vector<std::string> parts;
    for (const auto& [k, v] : counts) parts.push_back(fmt::format("{}: {}", k, v));
    if (parts.size() > 10) {
      parts.resize(10);
      parts.push_back("...");
    }
    return fmt::format("categorical, {} null; {}", nulls, text::join(parts, ", "));
  }
  std::vector<double> v;
  for (std::size_t r : rows) {
    if (auto x = data::as_number(c.values[r])) v.push_back(*x);
    else ++nulls;
  }
  if (v.empty()) return fmt::format("numeric, all {} null", nulls);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  return fmt::format("numeric, {} null; mean {}, min {}, max {}", nulls, fmt_num(mean), fmt_num(*mn), fmt_num(*mx));
}

}  // namespace

StepResult PlanSession::execute(const PlanStep& step, const Deadline& deadline) {
  StepResult result;
  result.step = step;
  const std::size_t n = dataset_.row_count();
  std::optional<Column> new_column;
  std::optional<std::vector<std::size_t>> new_active;

  if (const auto* f = std::get_if<FeaturizeStep>(&step)) {
    const auto& s = f->spec;
    if (s.mode == FeatureSpec::Mode::programmatic) {
      new_column = Column{s.name, ColumnKind::numeric,
                          builtin_featurize(s.featurizer, s.params, dataset_, s.source_columns), false};
    } else {
      if (!labels_) throw Error("llm featurize requested but no annotator is configured");
      auto labelled = labels_->annotate(s, dataset_, active_);
      if (labelled.labels.size() != active_.size()) throw Error("annotator returned the wrong number of labels");
      std::vector<Cell> values(n);
      for (std::size_t i = 0; i < active_.size(); ++i) {
        if (labelled.labels[i]) values[active_[i]] = *labelled.labels[i];
      }
      new_column = Column{s.name, ColumnKind::categorical, std::move(values), false};
      result.warnings = std::move(labelled.warnings);
    }
  } else if (const auto* d = std::get_if<DeriveStep>(&step)) {
    const auto e = Expression::parse(d->expr);
    std::vector<Cell> values(n);
    for (std::size_t r = 0; r < n; ++r) {
      if ((r & 1023) == 0) deadline.check();
      if (auto v = e.evaluate(dataset_, r)) values[r] = *v;
    }
    new_column = Column{d->target, ColumnKind::numeric, std::move(values), false};
  } else if (const auto* g = std::get_if<GroupRankStep>(&step)) {
    new_column = Column{g->target, ColumnKind::numeric,
                        group_rank(dataset_, g->group_key, g->order_by, g->descending, active_), false};
  } else if (const auto* f = std::get_if<FilterStep>(&step)) {
    const auto& c = dataset_.column(f->column);
    std::vector<std::size_t> keep;
    if (f->level) {
      for (std::size_t r : active_) {
        const auto* s = data::as_text(c.values[r]);
        if (s && ((*s == *f->level) == (f->cmp == "=="))) keep.push_back(r);
      }
    } else {
      double threshold = 0.0;
      if (f->quantile) {
        std::vector<double> v;
        for (std::size_t r : active_) {
          if (auto x = data::as_number(c.values[r])) v.push_back(*x);
        }
        if (v.empty()) throw InvalidArgument(fmt::format("filter: column '{}' has no values in the working rows", f->column));
        std::sort(v.begin(), v.end());
        threshold = data::quantile_sorted(v, *f->quantile);
        result.warnings.push_back(fmt::format("quantile {} of {} = {}", *f->quantile, f->column, fmt_num(threshold)));
      } else {
        threshold = *f->value;
      }
      for (std::size_t r : active_) {
        auto x = data::as_number(c.values[r]);
        if (x && compare(*x, f->cmp, threshold)) keep.push_back(r);
      }
    }
    if (keep.empty()) throw InvalidArgument(fmt::format("filter on '{}' would remove every working row", f->column));
    new_active = std::move(keep);
  } else if (const auto* t = std::get_if<TestStep>(&step)) {
    result.test = run_test(dataset_, active_, *t);
  } else if (const auto* r = std::get_if<RegressStep>(&step)) {
    result.regression = run_regress(dataset_, active_, *r);
  }

  deadline.check();
  if (new_column) {
    if (created_count_ + 1 > budget_.max_created_columns) {
      throw InvalidArgument(fmt::format("column budget of {} exceeded", budget_.max_created_columns));
    }
    result.created.push_back(new_column->name);
    result.summary = column_profile(*new_column, new_active ? *new_active : active_);
    dataset_.add_column(std::move(*new_column));
    ++created_count_;
  }
  if (new_active) active_ = std::move(*new_active);
  result.rows_remaining = active_.size();
  result.number = history_.size() + 1;
  history_.push_back(result);
  return result;
}

PlanOutcome PlanSession::run(const ExperimentPlan& plan) {
  PlanOutcome out;
  out.rows_remaining = active_.size();
  auto errors = validate_plan(plan, dataset_.schema());
  if (!errors.empty()) {
    out.failure = StepFailure{0, "plan rejected: " + text::join(errors, "; ")};
    return out;
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (attempted_ >= budget_.max_steps) {
      out.failure = StepFailure{i, fmt::format("step budget of {} exhausted", budget_.max_steps)};
      break;
    }
    ++attempted_;
    try {
      Deadline deadline(budget_.per_step_time_limit);
      StepResult r = execute(plan[i], deadline);
      out.created_columns.insert(out.created_columns.end(), r.created.begin(), r.created.end());
      if (r.test) out.test_results.emplace_back(r.number, *r.test);
      if (r.regression) out.regression_results.emplace_back(r.number, *r.regression);
      out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
      out.steps.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.failure = StepFailure{i, e.what()};
      break;
    }
  }
  out.rows_remaining = active_.size();
  return out;
}

PlanOutcome execute_plan(const ExperimentPlan& plan, const data::Dataset& dataset, LabelSource* labels,
                         const Budget& budget) {
  PlanSession session(dataset, labels, budget);
  return session.run(plan);
}

namespace {

std::string describe_effect(const stats::EffectSize& e) {
  std::string s = fmt::format("{} = {}", stats::to_string(e.kind), fmt_num(e.value));
  if (e.ci_low && e.ci_high) s += fmt::format(" [95% CI {}, {}]", fmt_num(*e.ci_low), fmt_num(*e.ci_high));
  return s;
}

}  // namespace

std::string describe_result(const StepResult& r) {
  std::string s = fmt::format("Step {}: {}", r.number, describe_step(r.step));
  if (r.test) {
    const auto& t = *r.test;
    s += fmt::format("\n  statistic = {}", fmt_num(t.statistic));
    if (t.degrees_of_freedom) s += fmt::format(", df = {}", fmt_num(*t.degrees_of_freedom));
    s += fmt::format(", p = {}, {}", fmt_num(t.p_two_sided), describe_effect(t.effect));
    for (const auto& e : t.extra_effects) s += ", " + describe_effect(e);
    std::vector<std::string> g;
    for (auto n : t.group_sizes) g.push_back(std::to_string(n));
    s += fmt::format(", group sizes ({})", text::join(g, ", "));
  }
  if (r.regression) {
    const auto& reg = *r.regression;
    s += fmt::format("\n  n = {}, converged = {}, iterations = {}", reg.n, reg.converged ? "yes" : "no", reg.iterations);
    for (const auto& c : reg.coefficients) {
      s += fmt::format("\n  {}: beta = {} (OR {}), se = {}, z = {}, p = {}", c.name, fmt_num(c.beta),
                       fmt_num(std::exp(c.beta)), fmt_num(c.std_err), fmt_num(c.wald_z), fmt_num(c.p));
    }
  }
  if (!r.summary.empty()) s += "\n  " + r.summary;
  s += fmt::format("\n  rows remaining: {}", r.rows_remaining);
  for (const auto& w : r.warnings) s += "\n  note: " + w;
  if (r.test) {
    for (const auto& w : r.test->warnings) s += "\n  warning: " + w;
  }
  if (r.regression) {
    for (const auto& w : r.regression->warnings) s += "\n  warning: " + w;
  }
  return s;
}

std::string describe_outcome(const PlanOutcome& outcome) {
  std::vector<std::string> parts;
  for (const auto& r : outcome.steps) parts.push_back(describe_result(r));
  if (outcome.failure) {
    parts.push_back(fmt::format("FAILED at plan entry {}: {}", outcome.failure->plan_index + 1, outcome.failure->message));
  }
  if (parts.empty()) parts.emplace_back("(no steps executed)");
  return text::join(parts, "\n");
}

json step_result_to_json(const StepResult& r) {
  json j{{"step", r.number}, {"spec", step_to_json(r.step)}, {"rows_remaining", r.rows_remaining}};
  if (!r.created.empty()) j["created"] = r.created;
  if (!r.summary.empty()) j["summary"] = r.summary;
  if (r.test) j["test"] = *r.test;
  if (r.regression) j["regression"] = *r.regression;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

}  // namespace hypolab::lab
