#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hypolab/common/jsonl.hpp"
#include "hypolab/data/dataset.hpp"

namespace hypolab::lab {

// Deterministic text/numeric featurizers. All produce numeric cells; null
// inputs give null outputs.
//
//   text_length                         code points
//   word_count                          whitespace-separated tokens
//   sentence_count                      runs of . ! ? (a trailing fragment counts)
//   punctuation_count  {chars?}         default: ASCII punctuation
//   uppercase_ratio                     uppercase letters / letters (0 if none)
//   regex_present      {pattern, case_sensitive}   1/0
//   regex_count        {pattern, case_sensitive}   non-overlapping matches
//   contains_phrase    {phrase}         case-insensitive substring, 1/0
//   flesch_kincaid_grade
//   numeric_bucket     {edges}          count of edges <= value (numeric source)
//   token_set_overlap                   Jaccard of lower-cased word sets (two columns)
const std::vector<std::string>& featurizer_ids();

/// Problems with the featurizer id, parameters, or source column kinds;
/// empty when valid.
std::vector<std::string> check_featurizer(const std::string& id, const json& params,
                                          const std::vector<std::string>& columns,
                                          const std::map<std::string, data::ColumnKind>& schema);

/// Throws InvalidArgument on an unknown id or invalid parameters.
std::vector<data::Cell> builtin_featurize(const std::string& id, const json& params, const data::Dataset& dataset,
                                          const std::vector<std::string>& columns);

int count_syllables(std::string_view word);
double flesch_kincaid_grade(std::string_view text);

}  // namespace hypolab::lab
