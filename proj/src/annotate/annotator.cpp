#include "hypolab/annotate/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "hypolab/common/hash.hpp"
#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/log.hpp"
#include "hypolab/common/rng.hpp"
#include "hypolab/common/text.hpp"

namespace hypolab::annotate {

namespace {

constexpr std::string_view kTextSystem =
    "You are a helpful assistant designed to analyze and featurize short texts according to specific feature "
    "descriptions.";

constexpr std::string_view kTextUser =
    "Below is a short text snippet. Based on the feature description and predefined types, assign the most "
    "appropriate label to the text. Your response should strictly match one of the provided labels and must be "
    "directly inferable from the content of the text.\n"
    "\n"
    "---\n"
    "\n"
    "Text: {text}\n"
    "\n"
    "Feature Name: {feature}\n"
    "\n"
    "Feature Description: {description}\n"
    "\n"
    "Allowed Feature Types (Choose One): {types}";

constexpr std::string_view kVisualSystem =
    "You are a vision-language model tasked with analyzing visual content and extracting semantic features based "
    "on a given description.";

constexpr std::string_view kVisualUser =
    "You will be shown an image along with a feature description and a closed list of allowed labels. Carefully "
    "examine the image and assign exactly one label from the list that best fits the feature description. Respond "
    "only with the label, with no additional explanation.\n"
    "\n"
    "---\n"
    "\n"
    "Image: {image}\n"
    "\n"
    "Feature Name: {feature}\n"
    "\n"
    "Feature Description: {description}\n"
    "\n"
    "Allowed Feature Types (Choose One): {types}\n"
    "\n"
    "Response Format: <one label from the list above>";

bool is_edge_punct(unsigned char c) { return std::ispunct(c) || std::isspace(c); }

std::string fold(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_edge_punct(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_edge_punct(static_cast<unsigned char>(s[e - 1]))) --e;
  return text::to_lower(s.substr(b, e - b));
}

std::string label_set_hash(const std::vector<std::string>& labels) { return sha256_hex(json(labels).dump()); }

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
  std::string out(tmpl);
  for (const auto& [key, value] : slots) {
    const std::string token = "{" + key + "}";
    for (auto pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos + value.size())) {
      out.replace(pos, token.size(), value);
    }
  }
  return out;
}

}  // namespace

std::optional<std::string> match_label(std::string_view response, const std::vector<std::string>& labels) {
  const std::string got = fold(response);
  if (got.empty()) return std::nullopt;
  for (const auto& l : labels) {
    if (fold(l) == got) return l;
  }
  return std::nullopt;
}

std::string format_label_set(const std::vector<std::string>& labels) { return "{" + text::join(labels, ", ") + "}"; }

llm::ChatExchange text_prompt(const std::string& model, double temperature, std::string_view content,
                              const lab::FeatureSpec& feature) {
  // slots are filled left to right so that braces inside the text survive
  std::string user(kTextUser);
  const std::map<std::string, std::string> rest{
      {"feature", feature.name}, {"description", feature.description}, {"types", format_label_set(feature.labels)}};
  const auto pos = user.find("{text}");
  std::string head = user.substr(0, pos);
  std::string tail = fill(user.substr(pos + 6), rest);
  llm::ChatExchange e;
  e.model = model;
  e.temperature = temperature;
  e.max_output_tokens = 32;
  e.messages = {{llm::Role::system, std::string(kTextSystem), {}}, {llm::Role::user, head + std::string(content) + tail, {}}};
  return e;
}

llm::ChatExchange visual_prompt(const std::string& model, double temperature, const llm::Attachment& image,
                                const lab::FeatureSpec& feature) {
  llm::ChatExchange e;
  e.model = model;
  e.temperature = temperature;
  e.max_output_tokens = 32;
  const std::string user = fill(kVisualUser, {{"image", "<attached: " + image.path + ">"},
                                              {"feature", feature.name},
                                              {"description", feature.description},
                                              {"types", format_label_set(feature.labels)}});
  e.messages = {{llm::Role::system, std::string(kVisualSystem), {}}, {llm::Role::user, user, {image}}};
  return e;
}

std::string reminder_message(const std::vector<std::string>& labels) {
  return fmt::format("Your answer did not match an allowed label. Reply with exactly one of {} and nothing else.",
                     format_label_set(labels));
}

std::string media_type_for(const std::filesystem::path& path) {
  const auto ext = text::to_lower(path.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

Annotator::Annotator(llm::Gateway& gateway, AnnotatorOptions options) : gateway_(gateway), options_(std::move(options)) {
  if (options_.concurrency == 0) options_.concurrency = 1;
  if (!options_.cache_path.empty() && std::filesystem::exists(options_.cache_path)) {
    for (const auto& j : read_jsonl(options_.cache_path)) {
      const auto& label = j.at("label");
      cache_[j.at("key").get<std::string>()] =
          label.is_null() ? std::nullopt : std::optional<std::string>(label.get<std::string>());
    }
  }
}

std::size_t Annotator::gateway_calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t Annotator::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

Annotator::Outcome Annotator::ask(const llm::ChatExchange& first, const lab::FeatureSpec& feature) {
  Outcome out;
  try {
    auto reply = gateway_.complete(first);
    ++out.calls;
    if ((out.label = match_label(reply.text, feature.labels))) return out;
    auto second = first;
    second.messages.push_back({llm::Role::assistant, reply.text, {}});
    second.messages.push_back({llm::Role::user, reminder_message(feature.labels), {}});
    reply = gateway_.complete(second);
    ++out.calls;
    out.label = match_label(reply.text, feature.labels);
  } catch (const Error& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

AnnotationResult Annotator::annotate(const AnnotationJob& job, const data::Dataset& dataset) {
  const auto& spec = job.feature;
  if (spec.source_columns.size() != 1) throw InvalidArgument("annotation needs exactly one source column");
  std::set<std::string> distinct(spec.labels.begin(), spec.labels.end());
  if (distinct.size() < 2) throw InvalidArgument("annotation needs at least two distinct labels");
  for (const auto& l : spec.labels) {
    if (text::utf8_length(l) > 40) throw InvalidArgument(fmt::format("label '{}' is longer than 40 characters", l));
  }
  const auto& column = dataset.column(spec.source_columns.front());
  const bool visual = column.kind == data::ColumnKind::image_path;
  if (!visual && column.kind != data::ColumnKind::text && column.kind != data::ColumnKind::categorical) {
    throw InvalidArgument(fmt::format("column '{}' is {}, annotation needs text or image_path", column.name,
                                      data::to_string(column.kind)));
  }

  AnnotationResult result;
  result.labels.assign(job.rows.size(), std::nullopt);
  const std::string feature_key =
      sha256_hex(json{{"prefix", job.cache_prefix}, {"feature", spec.name}, {"description", spec.description},
                      {"labels", label_set_hash(spec.labels)}, {"model", options_.model}}
                     .dump());

  // one pending request per distinct cache key
  struct Pending {
    llm::ChatExchange exchange;
    std::vector<std::size_t> slots;  // positions in job.rows
    Outcome outcome;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> pending;
  std::vector<std::string> slot_key(job.rows.size());
  std::vector<std::size_t> missing_images;

  for (std::size_t i = 0; i < job.rows.size(); ++i) {
    const std::size_t row = job.rows[i];
    if (row >= dataset.row_count()) throw InvalidArgument(fmt::format("row {} is out of range", row));
    const auto* value = data::as_text(column.values[row]);
    if (value == nullptr || text::trim(*value).empty()) continue;

    std::string content_hash;
    std::optional<llm::Attachment> image;
    if (visual) {
      std::filesystem::path p(*value);
      if (p.is_relative() && !options_.image_root.empty()) p = options_.image_root / p;
      std::string bytes;
      try {
        bytes = read_file(p);
      } catch (const Error&) {
        missing_images.push_back(row);
        continue;
      }
      content_hash = sha256_hex(bytes);
      image = llm::Attachment{*value, media_type_for(p), base64_encode(bytes)};
    } else {
      content_hash = sha256_hex(*value);
    }
    const std::string key = sha256_hex(content_hash + ":" + feature_key);
    slot_key[i] = key;
    {
      std::lock_guard lock(mutex_);
      if (auto hit = cache_.find(key); hit != cache_.end()) {
        result.labels[i] = hit->second;
        continue;
      }
    }
    auto [it, fresh] = pending.try_emplace(key);
    if (fresh) {
      order.push_back(key);
      it->second.exchange = visual ? visual_prompt(options_.model, options_.temperature, *image, spec)
                                   : text_prompt(options_.model, options_.temperature, *value, spec);
    }
    it->second.slots.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < order.size(); k = next++) {
      auto& p = pending.at(order[k]);
      p.outcome = ask(p.exchange, spec);
    }
  };
  const std::size_t threads = std::min(options_.concurrency, order.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<std::size_t> failed_rows;
  std::string first_error;
  std::size_t parse_failures = 0;
  std::vector<json> new_records;
  for (const auto& key : order) {
    const auto& p = pending.at(key);
    result.gateway_calls += p.outcome.calls;
    if (p.outcome.failed) {
      for (std::size_t s : p.slots) failed_rows.push_back(job.rows[s]);
      if (first_error.empty()) first_error = p.outcome.error;
      continue;
    }
    if (!p.outcome.label) ++parse_failures;
    for (std::size_t s : p.slots) result.labels[s] = p.outcome.label;
  }
  // cache records go out in row order
  std::set<std::string> written;
  for (std::size_t i = 0; i < job.rows.size(); ++i) {
    const auto& key = slot_key[i];
    auto it = pending.find(key);
    if (key.empty() || it == pending.end() || it->second.outcome.failed || !written.insert(key).second) continue;
    const auto& label = it->second.outcome.label;
    new_records.push_back(json{{"v", 1}, {"key", key}, {"label", label ? json(*label) : json(nullptr)}});
  }
  {
    std::lock_guard lock(mutex_);
    calls_ += result.gateway_calls;
    for (const auto& r : new_records) {
      const auto& label = r.at("label");
      cache_[r.at("key").get<std::string>()] =
          label.is_null() ? std::nullopt : std::optional<std::string>(label.get<std::string>());
      if (!options_.cache_path.empty()) append_jsonl(options_.cache_path, r);
    }
  }

  if (!failed_rows.empty()) {
    std::sort(failed_rows.begin(), failed_rows.end());
    std::vector<std::string> ids;
    for (std::size_t r : failed_rows) ids.push_back(std::to_string(r));
    throw Error(fmt::format("annotation of '{}' failed for rows {}: {}", spec.name, text::join(ids, ", "), first_error));
  }
  if (!missing_images.empty()) {
    std::vector<std::string> ids;
    for (std::size_t r : missing_images) ids.push_back(std::to_string(r));
    result.warnings.push_back(fmt::format("{}: {} image file(s) missing, labelled null (rows {})", spec.name,
                                          missing_images.size(), text::join(ids, ", ")));
  }
  if (parse_failures > 0) {
    result.warnings.push_back(
        fmt::format("{}: {} response(s) matched no allowed label after a reminder", spec.name, parse_failures));
  }
  std::size_t nulls = 0;
  for (const auto& l : result.labels) nulls += l ? 0 : 1;
  if (!job.rows.empty()) {
    const double rate = static_cast<double>(nulls) / static_cast<double>(job.rows.size());
    if (rate > options_.null_warning_rate) {
      result.warnings.push_back(fmt::format("{}: {:.1f}% of rows have no label", spec.name, 100.0 * rate));
    }
  }
  for (const auto& w : result.warnings) log_warning(w);
  return result;
}

lab::LabelSource::Result Annotator::annotate(const lab::FeatureSpec& spec, const data::Dataset& dataset,
                                             const std::vector<std::size_t>& rows) {
  auto r = annotate(AnnotationJob{spec, rows, ""}, dataset);
  return {std::move(r.labels), std::move(r.warnings)};
}

Labels inject_label_noise(const Labels& labels, double flip_rate, std::uint64_t seed) {
  if (!(flip_rate >= 0.0 && flip_rate <= 0.5)) throw InvalidArgument("flip_rate must be in [0, 0.5]");
  std::vector<std::string> classes;
  for (const auto& l : labels) {
    if (l && std::find(classes.begin(), classes.end(), *l) == classes.end()) classes.push_back(*l);
  }
  if (classes.size() != 2) {
    throw InvalidArgument(fmt::format("label noise needs exactly two classes, found {}", classes.size()));
  }
  Rng rng(seed);
  Labels out = labels;
  for (auto& l : out) {
    if (!l) continue;
    if (rng.bernoulli(flip_rate)) l = (*l == classes[0]) ? classes[1] : classes[0];
  }
  return out;
}

double agreement_f1(const Labels& predicted, const Labels& gold, const std::string& positive) {
  if (predicted.size() != gold.size()) throw InvalidArgument("predicted and gold differ in length");
  std::size_t tp = 0, fp = 0, fn = 0, gold_pos = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!predicted[i] || !gold[i]) continue;
    const bool p = *predicted[i] == positive;
    const bool g = *gold[i] == positive;
    gold_pos += g;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (gold_pos == 0) throw InvalidArgument(fmt::format("gold labels contain no '{}'", positive));
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace hypolab::annotate
