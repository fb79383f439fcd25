#include <doctest.h>

#include <filesystem>

#include "hypolab/annotate/annotator.hpp"
#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/log.hpp"

using namespace hypolab;
using namespace hypolab::annotate;
using data::Column;
using data::ColumnKind;
using data::Dataset;
namespace fs = std::filesystem;

namespace {

std::string render(const llm::ChatExchange& e) {
  std::string out;
  for (const auto& m : e.messages) out += "[" + std::string(llm::to_string(m.role)) + "]\n" + m.content + "\n";
  return out;
}

lab::FeatureSpec specificity() {
  lab::FeatureSpec s;
  s.name = "Specificity";
  s.description = "Does the review contain concrete, verifiable details about the stay?";
  s.mode = lab::FeatureSpec::Mode::llm;
  s.source_columns = {"review"};
  s.labels = {"Specific", "Vague", "No Details"};
  return s;
}

lab::FeatureSpec tone() {
  lab::FeatureSpec s;
  s.name = "tone";
  s.description = "Is the review deceptive?";
  s.mode = lab::FeatureSpec::Mode::llm;
  s.source_columns = {"review"};
  s.labels = {"truthful", "deceptive"};
  return s;
}

Dataset reviews(const std::vector<std::string>& texts) {
  Column c{"review", ColumnKind::text, {}, false};
  for (const auto& t : texts) {
    if (t.empty()) c.values.emplace_back(std::monostate{});
    else c.values.emplace_back(t);
  }
  return Dataset({c});
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hypolab_annotate_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.row_count());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
  return r;
}

AnnotatorOptions options() {
  AnnotatorOptions o;
  o.model = "judge";
  return o;
}

llm::GatewayConfig quiet_config() {
  llm::GatewayConfig cfg;
  cfg.sleeper = [](std::chrono::milliseconds) {};
  return cfg;
}

}  // namespace

TEST_CASE("label matching trims punctuation and case") {
  const std::vector<std::string> labels{"truthful", "deceptive"};
  CHECK(match_label("Deceptive.", labels) == "deceptive");
  CHECK(match_label("  \"TRUTHFUL\"\n", labels) == "truthful");
  CHECK(match_label("**deceptive**", labels) == "deceptive");
  CHECK_FALSE(match_label("maybe truthful", labels));
  CHECK_FALSE(match_label("", labels));
  CHECK(match_label("no details!", {"Specific", "No Details"}) == "No Details");
}

TEST_CASE("text prompt matches the golden template") {
  const auto e = text_prompt("m", 0.0, "The {breakfast} buffet had fresh croissants and Maria at the desk was lovely.",
                             specificity());
  CHECK(render(e) == read_file(fs::path(HYPOLAB_GOLDEN) / "annotator_text_prompt.txt"));
  CHECK(e.temperature == 0.0);
}

TEST_CASE("annotation parses, retries once, then gives up") {
  set_log_sink(nullptr);
  auto provider = std::make_shared<llm::ScriptedProvider>(json::parse(R"({"rules": [
    {"match": ["room was dirty"], "responses": ["Deceptive."]},
    {"match": ["lovely stay"], "responses": ["maybe truthful", "still unsure"]},
    {"match": ["quiet street"], "responses": ["hmm", "Truthful"]}
  ]})"));
  llm::Gateway gw(quiet_config(), provider);
  Annotator ann(gw, options());
  const auto d = reviews({"The room was dirty.", "A lovely stay.", "On a quiet street.", ""});
  auto r = ann.annotate(AnnotationJob{tone(), all_rows(d), ""}, d);
  REQUIRE(r.labels.size() == 4);
  CHECK(r.labels[0] == "deceptive");
  CHECK_FALSE(r.labels[1]);
  CHECK(r.labels[2] == "truthful");
  CHECK_FALSE(r.labels[3]);
  CHECK(r.gateway_calls == 5);
  // 2 of 4 null: above the 20% threshold
  bool warned = false;
  for (const auto& w : r.warnings) warned = warned || w.find("50.0% of rows have no label") != std::string::npos;
  CHECK(warned);
  set_log_sink({});
}

TEST_CASE("warm cache answers without gateway calls") {
  set_log_sink(nullptr);
  const auto dir = scratch("cache");
  auto provider = std::make_shared<llm::ScriptedProvider>(json::parse(R"({"rules": [], "fallback": "truthful"})"));
  llm::Gateway gw(quiet_config(), provider);
  const auto d = reviews({"one", "two", "one", "three"});
  AnnotatorOptions opts = options();
  opts.cache_path = dir / "cache.jsonl";
  Labels cold;
  {
    Annotator ann(gw, opts);
    auto r = ann.annotate(AnnotationJob{tone(), all_rows(d), ""}, d);
    cold = r.labels;
    CHECK(r.gateway_calls == 3);  // duplicate text annotated once
    auto again = ann.annotate(AnnotationJob{tone(), all_rows(d), ""}, d);
    CHECK(again.gateway_calls == 0);
    CHECK(again.labels == cold);
  }
  const auto records = read_jsonl(opts.cache_path);
  CHECK(records.size() == 3);
  Annotator reloaded(gw, opts);
  auto warm = reloaded.annotate(AnnotationJob{tone(), all_rows(d), ""}, d);
  CHECK(warm.gateway_calls == 0);
  CHECK(warm.labels == cold);
  auto other = tone();
  other.description = "Different wording";
  CHECK(reloaded.annotate(AnnotationJob{other, {0}, ""}, d).gateway_calls == 1);
  set_log_sink({});
}

TEST_CASE("gateway failure names the rows") {
  set_log_sink(nullptr);
  auto provider = std::make_shared<llm::ScriptedProvider>(json::parse(R"({"rules": [
    {"match": ["zebra"], "responses": ["truthful"]}]})"));
  llm::Gateway gw(quiet_config(), provider);
  AnnotatorOptions opts = options();
  opts.concurrency = 1;
  Annotator ann(gw, opts);
  const auto d = reviews({"zebra", "broken", "zebra too", "also broken"});
  try {
    ann.annotate(AnnotationJob{tone(), all_rows(d), ""}, d);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("rows 1, 3") != std::string::npos);
  }
  set_log_sink({});
}

TEST_CASE("visual annotation attaches images and tolerates missing files") {
  set_log_sink(nullptr);
  auto provider = std::make_shared<llm::ScriptedProvider>(json::parse(R"({"rules": [
    {"match": ["vision-language"], "responses": ["Bright"]}]})"));
  llm::Gateway gw(quiet_config(), provider);
  AnnotatorOptions opts = options();
  opts.image_root = HYPOLAB_FIXTURES;
  Annotator ann(gw, opts);
  Column c{"photo", ColumnKind::image_path, {std::string("images/room1.png"), std::string("images/absent.png")}, false};
  Dataset d({c});
  lab::FeatureSpec s;
  s.name = "lighting";
  s.description = "How well lit is the room?";
  s.mode = lab::FeatureSpec::Mode::llm;
  s.source_columns = {"photo"};
  s.labels = {"Bright", "Dim"};
  auto r = ann.annotate(AnnotationJob{s, {0, 1}, ""}, d);
  CHECK(r.labels[0] == "Bright");
  CHECK_FALSE(r.labels[1]);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings[0].find("missing") != std::string::npos);

  const auto e = visual_prompt("m", 0.0, {"images/room1.png", "image/png", "QUJD"}, s);
  REQUIRE(e.messages[1].attachments.size() == 1);
  CHECK(e.messages[1].content.find("Allowed Feature Types (Choose One): {Bright, Dim}") != std::string::npos);
  CHECK(media_type_for("x/y.JPG") == "image/jpeg");
  set_log_sink({});
}

TEST_CASE("label noise") {
  Labels labels;
  for (int i = 0; i < 10000; ++i) labels.push_back(i % 3 ? "a" : "b");
  labels.push_back(std::nullopt);
  CHECK(inject_label_noise(labels, 0.0, 1) == labels);
  const auto noisy = inject_label_noise(labels, 0.1, 42);
  CHECK(noisy == inject_label_noise(labels, 0.1, 42));
  int flips = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) flips += labels[i] != noisy[i];
  // binomial(10000, 0.1): sd = 30, so 3 sd = 90
  CHECK(flips >= 900);
  CHECK(flips <= 1100);
  CHECK_FALSE(noisy.back());
  CHECK_THROWS_AS(inject_label_noise({"a", "b", "c"}, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(inject_label_noise(labels, 0.6, 1), InvalidArgument);
}

TEST_CASE("agreement F1") {
  const Labels gold{"p", "p", "n", "n"};
  CHECK(agreement_f1(gold, gold, "p") == 1.0);
  CHECK(agreement_f1({"n", "n", "n", "n"}, gold, "p") == 0.0);
  // 8 TP, 2 FP, 2 FN, 8 TN: precision = recall = 0.8
  Labels g, p;
  auto add = [&](const char* gv, const char* pv, int n) {
    for (int i = 0; i < n; ++i) {
      g.push_back(gv);
      p.push_back(pv);
    }
  };
  add("p", "p", 8);
  add("n", "p", 2);
  add("p", "n", 2);
  add("n", "n", 8);
  g.push_back(std::nullopt);
  p.push_back("p");
  CHECK(agreement_f1(p, g, "p") == doctest::Approx(0.8));
  CHECK_THROWS_AS(agreement_f1({"n"}, {"n"}, "p"), InvalidArgument);
  CHECK_THROWS_AS(agreement_f1({"n"}, {"n", "p"}, "p"), InvalidArgument);
}
