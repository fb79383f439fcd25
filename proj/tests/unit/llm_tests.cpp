#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "hypolab/common/jsonl.hpp"
#include "hypolab/common/log.hpp"
#include "hypolab/llm/gateway.hpp"

using namespace hypolab;
using namespace hypolab::llm;
namespace fs = std::filesystem;

namespace {

ChatExchange simple(const std::string& user, double temperature = 0.0) {
  ChatExchange e;
  e.model = "m";
  e.temperature = temperature;
  e.messages = {{Role::system, "You judge reviews.", {}}, {Role::user, user, {}}};
  return e;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hypolab_llm_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::shared_ptr<ScriptedProvider> echo_script() {
  return std::make_shared<ScriptedProvider>(json::parse(R"({
    "rules": [
      {"match": ["alpha"], "responses": ["first alpha", "second alpha"]},
      {"last": ["beta"], "responses": ["beta answer"]}
    ],
    "fallback": "default"
  })"));
}

class FlakyProvider : public Provider {
 public:
  int failures_before_success = 0;
  GatewayError::Kind kind = GatewayError::Kind::transient;
  std::atomic<int> calls{0};
  ProviderReply complete(const ChatExchange&) override {
    if (calls++ < failures_before_success) throw GatewayError(kind, "boom");
    return {"ok", 10, 2};
  }
  std::vector<std::vector<double>> embed(const std::string&, const std::vector<std::string>& t) override {
    return std::vector<std::vector<double>>(t.size(), std::vector<double>{3.0, 4.0});
  }
};

class SlowProvider : public Provider {
 public:
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  ProviderReply complete(const ChatExchange&) override {
    const int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --active;
    return {"ok", 1, 1};
  }
  std::vector<std::vector<double>> embed(const std::string&, const std::vector<std::string>&) override { return {}; }
};

}  // namespace

TEST_CASE("request hash ignores key order and tracks content") {
  const auto a = simple("hello");
  auto b = simple("hello");
  CHECK(request_hash(a) == request_hash(b));
  const auto j1 = json::parse(R"({"b":1,"a":{"y":2,"x":3}})");
  const auto j2 = json::parse(R"({"a":{"x":3,"y":2},"b":1})");
  CHECK(j1.dump() == j2.dump());
  b.temperature = 0.5;
  CHECK(request_hash(a) != request_hash(b));
  auto c = simple("hello ");
  CHECK(request_hash(a) != request_hash(c));
  auto d = simple("hello");
  d.messages[1].attachments.push_back({"img/a.png", "image/png", "AAAA"});
  auto e = d;
  e.messages[1].attachments[0].data_base64 = "AAAB";
  CHECK(request_hash(d) != request_hash(e));
  CHECK(canonical_json(d).dump().find("AAAA") == std::string::npos);
}

TEST_CASE("exchange validation") {
  ChatExchange e;
  CHECK_THROWS_AS(validate_exchange(e), InvalidArgument);
  e.messages = {{Role::user, "x", {}}};
  CHECK_THROWS_AS(validate_exchange(e), InvalidArgument);
  e.messages = {{Role::system, "s", {}}, {Role::assistant, "a", {}}, {Role::assistant, "b", {}}};
  CHECK_THROWS_AS(validate_exchange(e), InvalidArgument);
  e.messages = {{Role::system, "s", {{"p", "image/png", ""}}}};
  CHECK_THROWS_AS(validate_exchange(e), InvalidArgument);
  e.messages = {{Role::system, "s", {}}, {Role::user, "u", {}}, {Role::assistant, "a", {}}, {Role::tool, "t", {}}};
  CHECK_NOTHROW(validate_exchange(e));
}

TEST_CASE("scripted provider rules") {
  auto p = echo_script();
  CHECK(p->complete(simple("alpha one")).text == "first alpha");
  CHECK(p->complete(simple("alpha two")).text == "second alpha");
  CHECK(p->complete(simple("alpha three")).text == "second alpha");
  CHECK(p->complete(simple("beta")).text == "beta answer");
  CHECK(p->complete(simple("gamma")).text == "default");
  ScriptedProvider strict(json::parse(R"({"rules": []})"));
  CHECK_THROWS_AS(strict.complete(simple("x")), GatewayError);
}

TEST_CASE("record then replay is byte-identical with no provider traffic") {
  const auto dir = scratch("replay");
  const auto store = dir / "transcripts.jsonl";
  std::vector<std::string> recorded;
  {
    auto provider = echo_script();
    GatewayConfig cfg;
    cfg.mode = TransportMode::record;
    cfg.transcript_path = store;
    cfg.pricing["m"] = {1.0, 2.0};
    Gateway gw(cfg, provider);
    recorded.push_back(gw.complete(simple("alpha")).text);
    recorded.push_back(gw.complete(simple("alpha")).text);
    recorded.push_back(gw.complete(simple("beta")).text);
    CHECK(gw.totals().cost > 0.0);
    CHECK(provider->calls() == 3);
  }
  CHECK(read_jsonl(store).size() == 3);

  GatewayConfig cfg;
  cfg.mode = TransportMode::replay;
  cfg.transcript_path = store;
  Gateway gw(cfg, nullptr);
  auto r1 = gw.complete(simple("alpha"));
  auto r2 = gw.complete(simple("alpha"));
  auto r3 = gw.complete(simple("beta"));
  CHECK(r1.text == recorded[0]);
  CHECK(r2.text == recorded[1]);
  CHECK(r3.text == recorded[2]);
  CHECK(r1.replayed);
  CHECK(r1.usage.cost == 0.0);
  CHECK(gw.totals().cost == 0.0);
  CHECK(gw.totals().provider_calls == 0);

  const std::string mutated(100, 'z');
  try {
    gw.complete(simple("alpha" + mutated));
    FAIL("expected a replay miss");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayError::Kind::replay_miss);
    const std::string msg = e.what();
    CHECK(msg.find(request_hash(simple("alpha" + mutated))) != std::string::npos);
    CHECK(msg.find("alpha" + std::string(75, 'z') + "\"") != std::string::npos);
  }
}

TEST_CASE("transport configuration errors") {
  CHECK(transport_mode_from_string("record") == TransportMode::record);
  CHECK_THROWS_AS(transport_mode_from_string("tape"), InvalidArgument);
  GatewayConfig cfg;
  cfg.mode = TransportMode::replay;
  cfg.transcript_path = scratch("missing") / "nope.jsonl";
  CHECK_THROWS_AS(Gateway(cfg, nullptr), InvalidArgument);
  cfg.mode = TransportMode::live;
  CHECK_THROWS_AS(Gateway(cfg, nullptr), InvalidArgument);
}

TEST_CASE("missing credential fails before any request") {
  unsetenv(kApiKeyVariable);
  try {
    http_settings_from_environment();
    FAIL("expected authentication error");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayError::Kind::authentication);
  }
  setenv(kApiKeyVariable, "k", 1);
  unsetenv(kBaseUrlVariable);
  const auto s = http_settings_from_environment();
  CHECK(s.api_key == "k");
  CHECK(s.base_url == kDefaultBaseUrl);
  unsetenv(kApiKeyVariable);
}

TEST_CASE("retries back off exponentially within the bound") {
  set_log_sink(nullptr);
  auto flaky = std::make_shared<FlakyProvider>();
  flaky->failures_before_success = 2;
  std::vector<long> waits;
  GatewayConfig cfg;
  cfg.sleeper = [&](std::chrono::milliseconds d) { waits.push_back(d.count()); };
  Gateway gw(cfg, flaky);
  CHECK(gw.complete(simple("x")).text == "ok");
  CHECK(waits == std::vector<long>{1000, 2000});
  long total = 0;
  for (long w : waits) total += w;
  CHECK(total <= 7000);

  auto dead = std::make_shared<FlakyProvider>();
  dead->failures_before_success = 100;
  waits.clear();
  Gateway gw2(cfg, dead);
  try {
    gw2.complete(simple("x"));
    FAIL("expected exhaustion");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == GatewayError::Kind::exhausted);
  }
  CHECK(dead->calls == 3);
  CHECK(waits == std::vector<long>{1000, 2000});

  for (auto kind : {GatewayError::Kind::authentication, GatewayError::Kind::context_length}) {
    auto hard = std::make_shared<FlakyProvider>();
    hard->failures_before_success = 1;
    hard->kind = kind;
    Gateway gw3(cfg, hard);
    try {
      gw3.complete(simple("x"));
      FAIL("expected failure");
    } catch (const GatewayError& e) {
      CHECK(e.kind() == kind);
    }
    CHECK(hard->calls == 1);
  }
  set_log_sink({});
}

TEST_CASE("embeddings are unit length and deterministic") {
  GatewayConfig cfg;
  Gateway gw(cfg, echo_script());
  const auto v = gw.embed("e", {"the cat sat", "the cat sat", "a dog barked loudly"});
  REQUIRE(v.size() == 3);
  for (const auto& x : v) {
    double ss = 0;
    for (double d : x) ss += d * d;
    CHECK(std::abs(std::sqrt(ss) - 1.0) < 1e-6);
    CHECK(x.size() == v[0].size());
  }
  CHECK(v[0] == v[1]);
  CHECK_THROWS_AS(gw.embed("e", {}), InvalidArgument);
  CHECK_THROWS_AS(gw.embed("e", {""}), InvalidArgument);

  Gateway flat(cfg, std::make_shared<FlakyProvider>());
  const auto w = flat.embed("e", {"x"});
  CHECK(w[0][0] == doctest::Approx(0.6));
  CHECK(w[0][1] == doctest::Approx(0.8));

  const auto dir = scratch("embed");
  GatewayConfig rec = cfg;
  rec.mode = TransportMode::record;
  rec.transcript_path = dir / "t.jsonl";
  std::vector<std::vector<double>> recorded;
  {
    Gateway g(rec, echo_script());
    recorded = g.embed("e", {"one two", "three"});
  }
  rec.mode = TransportMode::replay;
  Gateway replay(rec, nullptr);
  CHECK(replay.embed("e", {"three"})[0] == recorded[1]);
  CHECK_THROWS_AS(replay.embed("e", {"four"}), GatewayError);
}

TEST_CASE("in-flight limiter bounds concurrency") {
  auto slow = std::make_shared<SlowProvider>();
  GatewayConfig cfg;
  cfg.max_in_flight = 2;
  Gateway gw(cfg, slow);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { gw.complete(simple("q" + std::to_string(i))); });
  for (auto& t : threads) t.join();
  CHECK(slow->peak.load() <= 2);
  CHECK(gw.totals().completions == 8);
}

TEST_CASE("http provider speaks chat-completions JSON") {
  auto e = simple("look");
  e.messages.push_back({Role::assistant, "plan", {}});
  e.messages.push_back({Role::tool, "result", {}});
  e.messages[1].attachments.push_back({"a.png", "image/png", "QUJD"});
  const auto body = HttpProvider::request_body(e);
  CHECK(body.at("model") == "m");
  CHECK(body.at("messages").at(3).at("role") == "user");
  CHECK(body.at("messages").at(1).at("content").at(1).at("image_url").at("url") == "data:image/png;base64,QUJD");

  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    const auto in = json::parse(req.body);
    json out{{"choices", {{{"message", {{"content", "echo:" + in.at("messages").at(1).at("content").get<std::string>()}}}}}},
             {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 3}}}};
    res.set_content(out.dump(), "application/json");
  });
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    const auto in = json::parse(req.body);
    json data = json::array();
    for (std::size_t i = 0; i < in.at("input").size(); ++i) data.push_back({{"index", i}, {"embedding", {1.0, 1.0}}});
    res.set_content(json{{"data", data}}.dump(), "application/json");
  });
  server.Post("/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error":{"code":"context_length_exceeded"}})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  GatewayConfig cfg;
  cfg.sleeper = [](std::chrono::milliseconds) {};
  set_log_sink(nullptr);
  Gateway gw(cfg, std::make_shared<HttpProvider>(HttpSettings{"http://127.0.0.1:" + std::to_string(port) + "/v1", "secret", 5}));
  const auto c = gw.complete(simple("ping"));
  CHECK(c.text == "echo:ping");
  CHECK(c.usage.prompt_tokens == 7);
  CHECK(seen_auth == "Bearer secret");
  CHECK(hits == 2);
  const auto emb = gw.embed("e", {"a", "b"});
  CHECK(emb.size() == 2);
  CHECK(emb[1][0] == doctest::Approx(std::sqrt(0.5)));

  Gateway bad(cfg, std::make_shared<HttpProvider>(HttpSettings{"http://127.0.0.1:" + std::to_string(port) + "/bad", "secret", 5}));
  try {
    bad.complete(simple("ping"));
    FAIL("expected context length error");
  } catch (const GatewayError& err) {
    CHECK(err.kind() == GatewayError::Kind::context_length);
  }
  set_log_sink({});
  server.stop();
  worker.join();
}
