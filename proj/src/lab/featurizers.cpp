#include "hypolab/lab/featurizers.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>
#include <regex>
#include <set>

#include "hypolab/common/error.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::lab {
namespace {

using data::Cell;
using data::ColumnKind;

bool is_textual(ColumnKind k) {
  return k == ColumnKind::text || k == ColumnKind::categorical || k == ColumnKind::image_path;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double sentence_count(std::string_view s) {
  double n = 0;
  bool content = false;  // non-space text since the last terminator
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.' || c == '!' || c == '?') {
      if (content) ++n;
      content = false;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      content = true;
    }
  }
  return content ? n + 1 : n;
}

std::regex compile(const json& params) {
  const std::string pattern = params.at("pattern").get<std::string>();
  auto flags = std::regex::ECMAScript;
  if (!params.at("case_sensitive").get<bool>()) flags |= std::regex::icase;
  return std::regex(pattern, flags);
}

std::string default_punctuation() {
  std::string p;
  for (int c = 33; c < 127; ++c) {
    if (std::ispunct(c)) p += static_cast<char>(c);
  }
  return p;
}

std::string lower_word(std::string_view w) {
  std::string out;
  for (char c : w) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& featurizer_ids() {
  static const std::vector<std::string> ids = {
      "text_length",     "word_count",      "sentence_count",       "punctuation_count",
      "uppercase_ratio", "regex_present",   "regex_count",          "contains_phrase",
      "flesch_kincaid_grade", "numeric_bucket", "token_set_overlap"};
  return ids;
}

int count_syllables(std::string_view word) {
  std::string w = lower_word(word);
  w.erase(std::remove(w.begin(), w.end(), '\''), w.end());
  if (w.empty()) return 0;
  auto vowel = [](char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; };
  int groups = 0;
  bool prev = false;
  for (char c : w) {
    const bool v = vowel(c);
    if (v && !prev) ++groups;
    prev = v;
  }
  // Silent trailing e ("make"), but not "-le" after a consonant ("table").
  if (w.size() > 2 && w.back() == 'e' && !vowel(w[w.size() - 2]) &&
      !(w[w.size() - 2] == 'l' && !vowel(w[w.size() - 3]))) {
    --groups;
  }
  return std::max(groups, 1);
}

double flesch_kincaid_grade(std::string_view s) {
  const auto ws = words(s);
  std::size_t n_words = 0;
  int syllables = 0;
  for (const auto& w : ws) {
    if (lower_word(w).empty()) continue;
    ++n_words;
    syllables += count_syllables(w);
  }
  if (n_words == 0) return 0.0;
  const double sentences = std::max(1.0, sentence_count(s));
  return 0.39 * (static_cast<double>(n_words) / sentences) + 11.8 * (syllables / static_cast<double>(n_words)) -
         15.59;
}

std::vector<std::string> check_featurizer(const std::string& id, const json& params,
                                          const std::vector<std::string>& columns,
                                          const std::map<std::string, data::ColumnKind>& schema) {
  std::vector<std::string> errors;
  const auto& ids = featurizer_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    errors.push_back(fmt::format("unknown featurizer '{}'", id));
    return errors;
  }
  const std::size_t want = id == "token_set_overlap" ? 2 : 1;
  if (columns.size() != want) {
    errors.push_back(fmt::format("featurizer '{}' takes {} source column(s), got {}", id, want, columns.size()));
  }
  for (const auto& c : columns) {
    auto it = schema.find(c);
    if (it == schema.end()) {
      errors.push_back(fmt::format("unknown column '{}'", c));
    } else if (id == "numeric_bucket") {
      if (it->second != ColumnKind::numeric && it->second != ColumnKind::timestamp) {
        errors.push_back(fmt::format("numeric_bucket needs a numeric column, '{}' is {}", c, to_string(it->second)));
      }
    } else if (!is_textual(it->second)) {
      errors.push_back(fmt::format("featurizer '{}' needs a text column, '{}' is {}", id, c, to_string(it->second)));
    }
  }
  if (!params.is_object() && !params.is_null()) {
    errors.push_back("params must be an object");
    return errors;
  }
  if (id == "regex_present" || id == "regex_count") {
    if (!params.contains("pattern") || !params["pattern"].is_string()) {
      errors.push_back(fmt::format("{} needs a string 'pattern'", id));
    }
    if (!params.contains("case_sensitive") || !params["case_sensitive"].is_boolean()) {
      errors.push_back(fmt::format("{} needs an explicit boolean 'case_sensitive'", id));
    }
    if (errors.empty()) {
      try {
        compile(params);
      } catch (const std::regex_error& e) {
        errors.push_back(fmt::format("invalid regex '{}': {}", params["pattern"].get<std::string>(), e.what()));
      }
    }
  } else if (id == "contains_phrase") {
    if (!params.contains("phrase") || !params["phrase"].is_string() || params["phrase"].get<std::string>().empty()) {
      errors.push_back("contains_phrase needs a non-empty string 'phrase'");
    }
  } else if (id == "punctuation_count") {
    if (params.contains("chars") && !params["chars"].is_string()) errors.push_back("'chars' must be a string");
  } else if (id == "numeric_bucket") {
    const auto it = params.find("edges");
    if (it == params.end() || !it->is_array() || it->empty()) {
      errors.push_back("numeric_bucket needs a non-empty 'edges' array");
    } else {
      double prev = -std::numeric_limits<double>::infinity();
      for (const auto& e : *it) {
        if (!e.is_number() || !(e.get<double>() > prev)) {
          errors.push_back("numeric_bucket edges must be strictly increasing numbers");
          break;
        }
        prev = e.get<double>();
      }
    }
  }
  return errors;
}

std::vector<Cell> builtin_featurize(const std::string& id, const json& params, const data::Dataset& dataset,
                                    const std::vector<std::string>& columns) {
  if (auto errors = check_featurizer(id, params, columns, dataset.schema()); !errors.empty()) {
    throw InvalidArgument(text::join(errors, "; "));
  }
  const auto& src = dataset.column(columns.front());
  const std::size_t n = dataset.row_count();
  std::vector<Cell> out(n);

  if (id == "numeric_bucket") {
    std::vector<double> edges = params.at("edges").get<std::vector<double>>();
    for (std::size_t r = 0; r < n; ++r) {
      if (auto v = data::as_number(src.values[r])) {
        out[r] = static_cast<double>(std::upper_bound(edges.begin(), edges.end(), *v) - edges.begin());
      }
    }
    return out;
  }
  if (id == "token_set_overlap") {
    const auto& other = dataset.column(columns[1]);
    for (std::size_t r = 0; r < n; ++r) {
      const auto* a = data::as_text(src.values[r]);
      const auto* b = data::as_text(other.values[r]);
      if (!a || !b) continue;
      std::set<std::string> sa, sb;
      for (const auto& w : words(*a)) {
        if (auto l = lower_word(w); !l.empty()) sa.insert(l);
      }
      for (const auto& w : words(*b)) {
        if (auto l = lower_word(w); !l.empty()) sb.insert(l);
      }
      std::size_t inter = 0;
      for (const auto& w : sa) inter += sb.count(w);
      const std::size_t uni = sa.size() + sb.size() - inter;
      out[r] = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return out;
  }

  std::optional<std::regex> re;
  if (id == "regex_present" || id == "regex_count") re = compile(params);
  const std::string punct = params.is_object() ? params.value("chars", default_punctuation()) : default_punctuation();
  const std::string phrase = id == "contains_phrase" ? text::to_lower(params.at("phrase").get<std::string>()) : "";

  for (std::size_t r = 0; r < n; ++r) {
    const auto* s = data::as_text(src.values[r]);
    if (!s) continue;
    double v = 0.0;
    if (id == "text_length") {
      v = static_cast<double>(text::utf8_length(*s));
    } else if (id == "word_count") {
      v = static_cast<double>(words(*s).size());
    } else if (id == "sentence_count") {
      v = sentence_count(*s);
    } else if (id == "punctuation_count") {
      v = static_cast<double>(std::count_if(s->begin(), s->end(), [&](char c) { return punct.find(c) != std::string::npos; }));
    } else if (id == "uppercase_ratio") {
      std::size_t letters = 0, upper = 0;
      for (unsigned char c : *s) {
        if (std::isalpha(c)) {
          ++letters;
          if (std::isupper(c)) ++upper;
        }
      }
      v = letters ? static_cast<double>(upper) / static_cast<double>(letters) : 0.0;
    } else if (id == "regex_present") {
      v = std::regex_search(*s, *re) ? 1.0 : 0.0;
    } else if (id == "regex_count") {
      v = static_cast<double>(std::distance(std::sregex_iterator(s->begin(), s->end(), *re), std::sregex_iterator()));
    } else if (id == "contains_phrase") {
      v = text::to_lower(*s).find(phrase) != std::string::npos ? 1.0 : 0.0;
    } else if (id == "flesch_kincaid_grade") {
      v = flesch_kincaid_grade(*s);
    }
    out[r] = v;
  }
  return out;
}

}  // namespace hypolab::lab
