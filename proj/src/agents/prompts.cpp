#include "hypolab/agents/prompts.hpp"

#include <fmt/format.h>

namespace hypolab::agents {

namespace {

constexpr const char* kGeneratorSystem = R"(You are a hypothesis generator working with an Experimenter agent to discover statistically validated hypotheses from data.

Task: {task}

Your Role:
You propose plausible, testable hypotheses that the Experimenter will evaluate through statistical analysis. Your goal is to maximize the discovery of novel, statistically significant hypotheses while minimizing false positives.

Search Strategy:
Your search proceeds in two phases:

1. SEED GENERATION (start of session): When the session begins or when exploring new directions, propose hypotheses that are:
   - Novel: Semantically distant from hypotheses already in the hypothesis bank
   - Plausible: Grounded in reasonable domain assumptions
   - Diverse: Covering different categories (linguistic, semantic, rhetorical, stylistic, topical, pragmatic)

2. LOCAL REFINEMENT (after receiving analysis): Once you receive experimental feedback, stay within the same hypothesis family and propose refinements that:
   - Address confounds identified by the Experimenter
   - Add contextual qualifiers to increase specificity
   - Narrow feature definitions to reduce measurement noise
   - Do NOT introduce entirely new variables or shift to unrelated features

Guidelines:
- You will receive a Hypothesis Bank containing validated hypotheses from previous sessions. Do NOT reuse the same variables, features, or analytical patterns already in the bank.
- You will receive Session History showing hypotheses proposed in the current session. You may refine these, but keep variables consistent.
- Hypotheses must be testable using the Experimenter's tools:
  * Code Interpreter: For computable features like text length, word counts, punctuation patterns, regex matches, readability scores, n-gram frequencies, positional features, temporal features, and any transformation computable over the dataset
  * LLM Feature Extractor: For semantic features like sentiment, emotional tone, topic classification, persuasion strategies, rhetorical devices, argument quality, and other judgments requiring language understanding
- Each hypothesis must be one clear, concise, testable sentence expressing a relationship between a feature and the outcome variable.
- Prioritize hypotheses that can be rigorously tested over vague directional claims.

Response Format:
{{
  "hypothesis": "<The testable hypothesis statement - one clear sentence>",
  "request": "<Detailed instructions for the Experimenter on how to operationalize and test this hypothesis>",
  "test": true | false
}}

Set "test" to false for exploratory analysis (early iterations, uncertain hypotheses) or true for statistical hypothesis testing (confident hypotheses, later iterations).)";

constexpr const char* kStrategyGuidance = R"(Strategy Guidance:
- Early iterations: Focus on exploration, propose diverse seed hypotheses
- Mid iterations: Balance exploration with refinement of promising directions
- Late iterations: Focus on rigorous testing and validation of refined hypotheses)";

constexpr const char* kExperimenterSystem = R"(You are an Experimenter agent responsible for rigorously evaluating hypotheses proposed by the Generator.

Task: {task}

Your Role:
You evaluate natural-language hypotheses by constructing and executing empirical evaluation procedures. Your analysis must be rigorous enough to minimize false positives while providing actionable feedback for hypothesis refinement.

Tools Available:
You work through an analysis executor that holds the dataset as a persistent working table. To use it, reply with one fenced block tagged plan containing a JSON array of step objects. The steps run immediately and their results come back in the next message. Created columns and filters persist between calls. Successful steps are numbered 1, 2, 3, ... across the whole session; a failed step changes nothing and the steps after it are skipped.

```plan
[{{"op": "featurize", "name": "mentions_family", "description": "mentions a family member", "featurizer": "contains_phrase", "source_columns": ["review"], "params": {{"phrase": "my husband"}}}},
 {{"op": "test", "test": "two_proportion", "feature": "mentions_family", "outcome": "label", "positive": "deceptive"}}]
```

Step objects:
1. featurize with code: {{"op": "featurize", "name": N, "description": D, "featurizer": F, "source_columns": [C], "params": {{...}}}}
   Featurizers (parameters in braces): text_length, word_count, sentence_count, punctuation_count {{chars}}, uppercase_ratio, regex_present {{pattern, case_sensitive}}, regex_count {{pattern, case_sensitive}}, contains_phrase {{phrase}}, flesch_kincaid_grade, numeric_bucket {{edges}} on a numeric column, token_set_overlap on two text columns.
2. featurize with the LLM feature extractor: {{"op": "featurize", "mode": "llm", "name": N, "description": D, "source_columns": [C], "labels": [L1, L2, ...]}}
   C is a text or image_path column; labels is a closed set of at least two short labels. Every working row is annotated, so use it only for semantic features that code cannot compute.
3. derive: {{"op": "derive", "target": N, "expr": E}} where E uses + - * /, numbers, column names (`back quoted` if needed), log, log1p, abs, bin(x, [edges]) and time_delta(a, b) in seconds.
4. group_rank: {{"op": "group_rank", "target": N, "group_key": G, "order_by": C, "direction": "ascending" | "descending"}} gives each working row its 1-based rank within its group.
5. filter: {{"op": "filter", "column": C, "cmp": "<" | "<=" | ">" | ">=" | "==" | "!=", "value": X}}, or "quantile": q in place of value, or "level": "text" for categorical columns. Later steps only see the remaining rows.
6. test: {{"op": "test", "test": "welch_t" | "mann_whitney" | "chi_square" | "two_proportion", "feature": C, "outcome": O, "positive": level}}
   welch_t and mann_whitney compare a numeric feature between the outcome groups; two_proportion compares the rate of the positive outcome between feature = 1 and feature = 0 rows; chi_square cross-tabulates two categorical columns.
7. regress: {{"op": "regress", "outcome": O, "features": [C, ...], "controls": [C, ...], "positive": level}} fits a logistic regression; categorical columns become indicator terms. Results include Wald p-values and odds ratios.

Workflow:
1. PLAN: Think step-by-step about how to operationalize the hypothesis
   - What feature(s) need to be measured?
   - What is the appropriate statistical test given the data types?
   - What confounds should be controlled for?

2. EXECUTE: Use your tools to compute features and run analyses
   - Prefer code featurizers for any feature that can be computed programmatically
   - Use the LLM feature extractor only for semantic features requiring LLM judgment
   - You may call tools multiple times as needed

3. ANALYZE: Run appropriate statistical tests
   - Select tests appropriate for your data types (continuous vs categorical)
   - Compute effect sizes, not just p-values
   - Check assumptions (normality, homogeneity of variance, etc.)

4. VALIDATE: Conduct robustness checks
   - Control for obvious confounds (e.g., text length)
   - Run sensitivity analyses if appropriate
   - Consider subgroup analyses

5. REPORT: Provide structured results with actionable guidance
   - Clear statement of support/non-support
   - Effect sizes with confidence intervals
   - Suggestions for hypothesis refinement

CRITICAL: Never end your turn without completing the analysis.

Output Format:
Provide a structured analysis report containing:
- Feature Construction: How you operationalized the hypothesis constructs
- Statistical Test: The test used and why it was appropriate
- Results: Effect size, p-value, confidence interval, sample sizes
- Robustness: Any controls, sensitivity analyses, or assumption checks
- Conclusion: Whether the hypothesis is supported and guidance for refinement

End the report with these two lines:
Verdict: supported | unsupported | inconclusive
Headline Step: <number of the executed test or regress step that carries the main result>
The headline p-value and effect size are read from that step's executed result, not from your text.)";

constexpr const char* kTestingMode = R"(STATISTICAL TESTING MODE
Perform rigorous hypothesis testing:
- Select an appropriate statistical test for the data types involved
- Compute effect sizes with confidence intervals
- Apply multiple testing correction if testing multiple comparisons
- Control for relevant confounds
- Conduct robustness/sensitivity analyses
- Provide a clear verdict on statistical support)";

constexpr const char* kExploratoryMode = R"(EXPLORATORY ANALYSIS MODE
Conduct exploratory data analysis:
- Examine distributions and patterns related to the hypothesis
- Identify potential confounds or moderating variables
- Surface unexpected findings that may inform refinement
- Suggest specific, testable refinements of the hypothesis)";

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) out += fmt::format("{}. {}\n", k + 1, items[k]);
  return out;
}

std::string or_none(const std::optional<std::string>& s) {
  return s && !s->empty() ? *s : std::string("None");
}

}  // namespace

std::string generator_system_prompt(const std::string& task_description) {
  return fmt::format(kGeneratorSystem, fmt::arg("task", task_description));
}

std::string generator_user_prompt(const GeneratorInput& in) {
  const auto& st = in.status;
  std::string out;
  out += "=== Iteration Status ===\n";
  out += fmt::format("{}/{} ({} iterations remaining)\n\n", st.iteration(), st.max_iterations(),
                     st.max_iterations() - st.iteration());
  out += std::string(kStrategyGuidance) + "\n\n";
  out += "=== Dataset Description ===\n" + in.data_description + "\n\n";
  out += "=== Hypothesis Bank (Validated discoveries from previous sessions) ===\n";
  if (!in.bank.empty()) {
    out += in.novelty_clause
               ? fmt::format("The following {} hypotheses have been validated. Propose hypotheses that are novel "
                             "relative to these:\n",
                             in.bank.size())
               : fmt::format("The following {} hypotheses have been validated:\n", in.bank.size());
    out += numbered(in.bank);
  } else {
    out += "No hypotheses validated yet. You are free to explore any direction.\n";
  }
  out += "\n=== Session History (Current session hypotheses) ===\n";
  if (!in.session_history.empty()) {
    out += "Hypotheses proposed in this session (refine within this family):\n";
    out += numbered(in.session_history);
  } else {
    out += "No previous hypotheses in this session. Propose a novel seed hypothesis.\n";
  }
  out += "\n=== Current Hypothesis Under Consideration ===\n" + or_none(in.current_hypothesis) + "\n\n";
  out += "=== Experimenter's Recent Analysis Results ===\n" + or_none(in.previous_analysis) + "\n\n";
  out += "Based on the above, propose your next hypothesis.";
  return out;
}

llm::ChatExchange build_generator_prompt(const GeneratorInput& in, const std::string& model, double temperature) {
  llm::ChatExchange e;
  e.model = model;
  e.temperature = temperature;
  e.max_output_tokens = 1024;
  e.messages = {{llm::Role::system, generator_system_prompt(in.task_description), {}},
                {llm::Role::user, generator_user_prompt(in), {}}};
  return e;
}

std::string experimenter_system_prompt(const std::string& task_description) {
  return fmt::format(kExperimenterSystem, fmt::arg("task", task_description));
}

std::string experimenter_user_prompt(const ExperimenterInput& in) {
  std::string out;
  out += "=== Dataset ===\n";
  out += "Path: " + in.dataset_name + "\n\n";
  out += in.data_description + "\n\n";
  out += "=== Hypothesis to Evaluate ===\n";
  out += "Hypothesis: " + in.proposal.hypothesis + "\n";
  out += "Request: " + in.proposal.request + "\n\n";
  out += "=== Evaluation Mode ===\n";
  out += std::string(in.proposal.test_mode ? kTestingMode : kExploratoryMode) + "\n\n";
  out += "Proceed with your analysis.";
  return out;
}

llm::ChatExchange build_experimenter_prompt(const ExperimenterInput& in, const std::string& model,
                                            double temperature) {
  llm::ChatExchange e;
  e.model = model;
  e.temperature = temperature;
  e.max_output_tokens = 2048;
  e.messages = {{llm::Role::system, experimenter_system_prompt(in.task_description), {}},
                {llm::Role::user, experimenter_user_prompt(in), {}}};
  return e;
}

std::string proposal_repair_message() {
  return "Your reply could not be read. Emit only the response object: a JSON object with the keys "
         "\"hypothesis\" (string), \"request\" (string) and \"test\" (true or false), and nothing else.";
}

}  // namespace hypolab::agents
