#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <thread>

#include "matforge/gateway.hpp"
#include "matforge/hashing.hpp"
#include "matforge/run_store.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

using namespace matforge;
using namespace matforge::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json chat_body(const std::string& text) {
  return {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}}},
          {"usage", {{"prompt_tokens", 3}, {"completion_tokens", 2}}}};
}

// OpenAI-style endpoint on an ephemeral port; the handler decides each reply.
class FakeEndpoint {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit FakeEndpoint(Handler handler) : handler_(std::move(handler)) {
    auto wrap = [this](const httplib::Request& req, httplib::Response& res) {
      ++calls;
      last_auth = req.get_header_value("Authorization");
      last_path = req.path;
      handler_(req, res);
    };
    server_.Post("/v1/chat/completions", wrap);
    server_.Post("/v1/completions", wrap);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::atomic<int> calls{0};
  std::string last_auth;
  std::string last_path;

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

GatewayConfig live(const std::string& base_url) {
  GatewayConfig c;
  c.base_url = base_url;
  c.model_name = kFixtureModel;
  c.backoff_base = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(5000);
  return c;
}

// A port nothing listens on: bind, note the port, release it.
std::string dead_url() {
  httplib::Server s;
  const int port = s.bind_to_any_port("127.0.0.1");
  return "http://127.0.0.1:" + std::to_string(port) + "/v1";
}


const GenerationParams kParams = default_params(GenerationTask::kAnnotate);

}  // namespace

TEST(Params, DefaultsAndValidation) {
  EXPECT_EQ(default_params(GenerationTask::kNerEval).temperature, 0.1);
  EXPECT_EQ(default_params(GenerationTask::kAnnotate).temperature, 0.0);
  EXPECT_EQ(default_params(GenerationTask::kKgConstruct).top_p, 0.9);
  GenerationParams p;
  p.top_p = 0.0;
  EXPECT_MF_ERROR(p.validate(), ErrorCode::kInvalidConfig);
  p.top_p = 1.0;
  p.temperature = -0.5;
  EXPECT_MF_ERROR(p.validate(), ErrorCode::kInvalidConfig);
  EXPECT_MF_ERROR(parse_gateway_mode("offline"), ErrorCode::kInvalidConfig);
}

TEST(Request, ShapeAndHash) {
  LlmGateway gw(live(dead_url()));
  auto params = kParams;
  params.stop_sequences = {"\n\n"};
  const json req = gw.build_request("Hello", params);
  EXPECT_EQ(req["model"], kFixtureModel);
  EXPECT_EQ(req["messages"][0]["content"], "Hello");
  EXPECT_EQ(req["temperature"], 0.0);
  EXPECT_EQ(req["stop"][0], "\n\n");
  EXPECT_EQ(req["stream"], false);
  // Sorted-key canonical form: key order in the source object is irrelevant.
  json reordered = json::object();
  for (auto it = req.rbegin(); it != req.rend(); ++it) reordered[it.key()] = it.value();
  EXPECT_EQ(LlmGateway::request_hash(req), LlmGateway::request_hash(reordered));
  EXPECT_EQ(LlmGateway::request_hash(req), sha256_hex(req.dump()));
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_NE(LlmGateway::request_hash(gw.build_request("Hello!", params)), LlmGateway::request_hash(req));
}

TEST(Live, ChatCompletionAndAuth) {
  FakeEndpoint ep([](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    res.set_content(chat_body("echo: " + body["messages"][0]["content"].get<std::string>()).dump(), "application/json");
  });
  auto cfg = live(ep.base_url());
  cfg.auth_header = "Bearer token-1";
  LlmGateway gw(cfg);
  const auto c = gw.complete("ping", kParams);
  EXPECT_EQ(c.text, "echo: ping");
  EXPECT_EQ(c.usage["prompt_tokens"], 3);
  EXPECT_FALSE(c.replayed);
  EXPECT_EQ(ep.last_auth, "Bearer token-1");
  EXPECT_EQ(ep.last_path, "/v1/chat/completions");
}

TEST(Live, CompletionStyle) {
  FakeEndpoint ep([](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    EXPECT_TRUE(body.contains("prompt"));
    res.set_content(json{{"choices", {{{"text", "done"}}}}}.dump(), "application/json");
  });
  auto cfg = live(ep.base_url());
  cfg.api_style = ApiStyle::kCompletion;
  LlmGateway gw(cfg);
  EXPECT_EQ(gw.complete("x", kParams).text, "done");
  EXPECT_EQ(ep.last_path, "/v1/completions");
}

TEST(Live, RetriesTransientStatus) {
  std::atomic<int> n{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    if (n++ < 2) {
      res.status = n == 1 ? 503 : 429;
      res.set_content("busy", "text/plain");
      return;
    }
    res.set_content(chat_body("ok").dump(), "application/json");
  });
  LlmGateway gw(live(ep.base_url()));
  const auto c = gw.complete("x", kParams);
  EXPECT_EQ(c.text, "ok");
  EXPECT_EQ(c.retries, 2u);
  EXPECT_EQ(ep.calls, 3);
}

TEST(Live, GivesUpAfterMaxRetries) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  auto cfg = live(ep.base_url());
  cfg.max_retries = 2;
  LlmGateway gw(cfg);
  EXPECT_MF_ERROR(gw.complete("x", kParams), ErrorCode::kEndpoint);
  EXPECT_EQ(ep.calls, 3);
}

TEST(Live, ClientErrorsAreNotRetried) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  LlmGateway gw(live(ep.base_url()));
  EXPECT_MF_ERROR(gw.complete("x", kParams), ErrorCode::kEndpoint);
  EXPECT_EQ(ep.calls, 1);
}

TEST(Live, MalformedAndEmptyResponses) {
  std::atomic<int> n{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    switch (n++) {
      case 0: res.set_content("not json", "text/plain"); break;
      case 1: res.set_content(R"({"choices": []})", "application/json"); break;
      default: res.set_content(chat_body("  \n").dump(), "application/json");
    }
  });
  LlmGateway gw(live(ep.base_url()));
  EXPECT_MF_ERROR(gw.complete("x", kParams), ErrorCode::kEndpoint);
  EXPECT_MF_ERROR(gw.complete("x", kParams), ErrorCode::kEndpoint);
  EXPECT_MF_ERROR(gw.complete("x", kParams), ErrorCode::kEmptyCompletion);
}

TEST(Live, ConnectionFailureIsTransport) {
  auto cfg = live(dead_url());
  cfg.max_retries = 1;
  cfg.timeout = std::chrono::milliseconds(500);
  LlmGateway gw(cfg);
  EXPECT_MF_ERROR(gw.complete("x", kParams), ErrorCode::kTransport);
}

TEST(Live, ConcurrencyIsBounded) {
  std::atomic<int> in_flight{0}, peak{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    --in_flight;
    res.set_content(chat_body("ok").dump(), "application/json");
  });
  auto cfg = live(ep.base_url());
  cfg.max_concurrency = 2;
  LlmGateway gw(cfg);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { gw.complete("p" + std::to_string(i), kParams); });
  threads.clear();
  EXPECT_EQ(ep.calls, 8);
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(Cassettes, RecordThenReplayOffline) {
  TempDir tmp;
  const fs::path cassette = tmp.path() / "c.jsonl";
  {
    FakeEndpoint ep([](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      res.set_content(chat_body("rec: " + body["messages"][0]["content"].get<std::string>()).dump(), "application/json");
    });
    auto cfg = live(ep.base_url());
    cfg.mode = GatewayMode::kRecord;
    cfg.cassette_path = cassette;
    LlmGateway gw(cfg);
    EXPECT_EQ(gw.complete("one", kParams).text, "rec: one");
    EXPECT_EQ(gw.complete("two", kParams).text, "rec: two");
  }
  const auto lines = read_file(cassette);
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 2);
  const auto first = json::parse(lines.substr(0, lines.find('\n')));
  for (const char* key : {"request_hash", "request", "response", "timestamp"}) EXPECT_TRUE(first.contains(key)) << key;
  EXPECT_EQ(first["request_hash"], LlmGateway::request_hash(first["request"]));

  auto cfg = replay_config(cassette);
  cfg.base_url = dead_url();
  LlmGateway gw(cfg);
  const auto c = gw.complete("two", kParams);
  EXPECT_EQ(c.text, "rec: two");
  EXPECT_TRUE(c.replayed);
  EXPECT_MF_ERROR(gw.complete("three", kParams), ErrorCode::kCassetteMiss);
  // Generation parameters are part of the request identity.
  EXPECT_MF_ERROR(gw.complete("two", default_params(GenerationTask::kNerEval)), ErrorCode::kCassetteMiss);
}

TEST(Cassettes, LaterLinesWinAndBadLinesFail) {
  TempDir tmp;
  const fs::path path = tmp.path() / "c.jsonl";
  Cassette c;
  c.append(path, "h1", json{{"a", 1}}, chat_body("old"));
  c.append(path, "h1", json{{"a", 1}}, chat_body("new"));
  const auto loaded = Cassette::load(path);
  EXPECT_EQ(loaded.size(), 1u);
  EXPECT_EQ((*loaded.find("h1"))["choices"][0]["message"]["content"], "new");
  EXPECT_FALSE(loaded.find("h2"));

  write_file_atomic(path, "{\"request_hash\": \"x\"}\n");
  EXPECT_MF_ERROR(Cassette::load(path), ErrorCode::kStore);
  EXPECT_MF_ERROR(Cassette::load(tmp.path() / "absent.jsonl"), ErrorCode::kStore);
}

TEST(Cassettes, ReplayNeedsCassette) {
  EXPECT_MF_ERROR(LlmGateway(replay_config("/nonexistent/c.jsonl")), ErrorCode::kInvalidConfig);
  auto cfg = live(dead_url());
  cfg.mode = GatewayMode::kRecord;
  EXPECT_MF_ERROR(LlmGateway{cfg}, ErrorCode::kInvalidConfig);
}

TEST(Cassettes, FixtureCassetteReplays) {
  const auto c = Cassette::load(fixture_dir() / "cassettes" / "pipeline.jsonl");
  EXPECT_EQ(c.size(), 9u);
}
