#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "strot/backend.hpp"
#include "support.hpp"

using namespace strot;

namespace {

Prompt simple_prompt(Stage stage, const std::string& body) {
  Prompt prompt;
  prompt.stage = stage;
  prompt.temperature = 0.25;
  prompt.max_tokens = 333;
  prompt.sections.push_back({"Task", body});
  return prompt;
}

// One stub endpoint per test: handler decides status and body, the harness
// records what arrived on the wire.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;

  explicit StubServer(std::function<void(int call, httplib::Response&)> respond) {
    server.Post("/v1/chat/completions",
                [this, respond](const httplib::Request& req, httplib::Response& res) {
                  last_body = req.body;
                  last_auth = req.get_header_value("Authorization");
                  respond(++hits, res);
                });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~StubServer() {
    server.stop();
    thread.join();
  }

  BackendConfig config() const {
    BackendConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    c.model_id = "test-model";
    c.api_key = Secret{"sk-unit-test"};
    c.timeout_seconds = 5;
    c.backoff_base_ms = 1;
    return c;
  }
};

void reply_ok(httplib::Response& res, const std::string& content) {
  ojson body;
  body["choices"] = ojson::array(
      {ojson{{"message", ojson{{"role", "assistant"}, {"content", content}}}}});
  body["usage"] = ojson{{"prompt_tokens", 120}, {"completion_tokens", 45}};
  res.status = 200;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

TEST_CASE("scripted backend serves fixtures in order with stage and regex gates") {
  std::vector<ScriptFixture> script;
  ScriptFixture plan_only;
  plan_only.stage = Stage::plan;
  plan_only.response = "plan answer";
  script.push_back(plan_only);

  ScriptFixture keyed;
  keyed.match = "deaths";
  keyed.response = "matched deaths";
  script.push_back(keyed);

  ScriptFixture fallback;
  fallback.response = "anything";
  fallback.repeat = true;
  script.push_back(fallback);

  ScriptedBackend backend(script);
  CHECK(backend.describe() == "scripted");

  // Stage gate: a synthesize prompt skips the plan fixture.
  auto first = backend.complete(simple_prompt(Stage::synthesize, "sum deaths"));
  REQUIRE(first.ok());
  CHECK(first.value().text == "matched deaths");
  CHECK(first.value().prompt_tokens > 0);

  auto second = backend.complete(simple_prompt(Stage::plan, "whatever"));
  REQUIRE(second.ok());
  CHECK(second.value().text == "plan answer");

  // Consumed fixtures do not serve twice; the repeat fixture serves forever.
  for (int i = 0; i < 3; ++i) {
    auto again = backend.complete(simple_prompt(Stage::refine, "deaths"));
    REQUIRE(again.ok());
    CHECK(again.value().text == "anything");
  }
  CHECK(backend.calls_served() == 5);
}

TEST_CASE("exhausted scripts report an infrastructure code") {
  ScriptFixture one;
  one.response = "only once";
  ScriptedBackend backend({one});
  CHECK(backend.complete(simple_prompt(Stage::plan, "x")).ok());

  auto dry = backend.complete(simple_prompt(Stage::plan, "x"));
  REQUIRE(!dry.ok());
  CHECK(dry.error().code == ErrorCode::script_exhausted);
  CHECK(dry.error().offending_symbol == "plan");
}

TEST_CASE("personas fabricate the canned failure shapes") {
  ScriptFixture bad;
  bad.persona = Persona::bad_field;
  ScriptFixture garbled;
  garbled.persona = Persona::malformed_object;
  ScriptFixture silent;
  silent.persona = Persona::empty;
  ScriptedBackend backend({bad, garbled, silent});

  auto a = backend.complete(simple_prompt(Stage::synthesize, "x"));
  REQUIRE(a.ok());
  CHECK(a.value().text.find("__no_such_column__") != std::string::npos);

  auto b = backend.complete(simple_prompt(Stage::synthesize, "x"));
  REQUIRE(b.ok());
  CHECK(!extract_first_object(b.value().text));

  auto c = backend.complete(simple_prompt(Stage::synthesize, "x"));
  REQUIRE(c.ok());
  CHECK(c.value().text.empty());
}

TEST_CASE("fixture files parse with validation") {
  auto good = load_fixtures(
      testsupport::fixture_path("scripted/who_region_happy.json"));
  REQUIRE(good.ok());
  CHECK(good.value().size() == 2);
  CHECK(good.value()[0].stage == Stage::plan);
  CHECK(good.value()[1].stage == Stage::synthesize);

  CHECK(load_fixtures("/no/such/fixtures.json").error().code ==
        ErrorCode::io_error);
}

TEST_CASE("backend config serializes without the secret") {
  BackendConfig config;
  config.endpoint = "https://api.example.com/v1/chat/completions";
  config.model_id = "gpt-4-turbo";
  config.api_key = Secret{"sk-very-secret"};
  const std::string dumped = config_to_json(config).dump();
  CHECK(dumped.find("sk-very-secret") == std::string::npos);
  CHECK(dumped.find("api_key") == std::string::npos);
  CHECK(dumped.find("gpt-4-turbo") != std::string::npos);
}

TEST_CASE("http backend speaks the chat-completions wire format") {
  StubServer stub([](int, httplib::Response& res) { reply_ok(res, "the answer"); });
  HttpBackend backend(stub.config());
  CHECK(backend.describe() == "test-model");

  Prompt prompt = simple_prompt(Stage::synthesize, "compose a program");
  auto r = backend.complete(prompt);
  REQUIRE(r.ok());
  CHECK(r.value().text == "the answer");
  CHECK(r.value().prompt_tokens == 120);    // provider usage wins
  CHECK(r.value().completion_tokens == 45);

  CHECK(stub.last_auth == "Bearer sk-unit-test");
  ojson sent = ojson::parse(stub.last_body);
  CHECK(sent["model"] == "test-model");
  CHECK(sent["temperature"] == 0.25);
  CHECK(sent["max_tokens"] == 333);
  REQUIRE(sent["messages"].size() == 2);
  CHECK(sent["messages"][0]["role"] == "system");
  CHECK(sent["messages"][1]["role"] == "user");
  CHECK(sent["messages"][1]["content"] == prompt.render());
}

TEST_CASE("auth failures are terminal, transient statuses retry") {
  StubServer rejecting([](int, httplib::Response& res) {
    res.status = 401;
    res.set_content("{\"error\": \"bad key\"}", "application/json");
  });
  HttpBackend denied(rejecting.config());
  auto r = denied.complete(simple_prompt(Stage::plan, "x"));
  REQUIRE(!r.ok());
  CHECK(r.error().code == ErrorCode::auth_failure);
  CHECK(rejecting.hits == 1);  // never retried

  StubServer flaky([](int call, httplib::Response& res) {
    if (call == 1) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
    } else {
      reply_ok(res, "recovered");
    }
  });
  HttpBackend retrying(flaky.config());
  auto ok = retrying.complete(simple_prompt(Stage::plan, "x"));
  REQUIRE(ok.ok());
  CHECK(ok.value().text == "recovered");
  CHECK(flaky.hits == 2);

  StubServer always_down([](int, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  HttpBackend failing(always_down.config());
  auto dead = failing.complete(simple_prompt(Stage::plan, "x"));
  REQUIRE(!dead.ok());
  CHECK(dead.error().code == ErrorCode::transport);
  CHECK(always_down.hits == 3);  // two retries, then surface
}

TEST_CASE("content problems surface without retries") {
  StubServer no_content([](int, httplib::Response& res) {
    res.status = 200;
    res.set_content("{\"choices\": []}", "application/json");
  });
  HttpBackend backend(no_content.config());
  auto r = backend.complete(simple_prompt(Stage::plan, "x"));
  REQUIRE(!r.ok());
  CHECK(r.error().code == ErrorCode::empty_completion);
  CHECK(no_content.hits == 1);

  StubServer not_json([](int, httplib::Response& res) {
    res.status = 200;
    res.set_content("plain text, not an API response", "text/plain");
  });
  HttpBackend garbled(not_json.config());
  auto g = garbled.complete(simple_prompt(Stage::plan, "x"));
  REQUIRE(!g.ok());
  CHECK(g.error().code == ErrorCode::transport);
  CHECK(not_json.hits == 1);
}

TEST_CASE("usage falls back to the byte estimate when absent") {
  StubServer stub([](int, httplib::Response& res) {
    res.status = 200;
    res.set_content("{\"choices\": [{\"message\": {\"content\": \"abcdefgh\"}}]}",
                    "application/json");
  });
  HttpBackend backend(stub.config());
  Prompt prompt = simple_prompt(Stage::plan, "estimate me");
  auto r = backend.complete(prompt);
  REQUIRE(r.ok());
  CHECK(r.value().completion_tokens == 2);  // ceil(8 / 4)
  CHECK(r.value().prompt_tokens ==
        static_cast<std::size_t>(estimate_tokens(prompt.render())));
}

TEST_CASE("unreachable endpoints come back as transport errors") {
  BackendConfig config;
  config.endpoint = "http://127.0.0.1:1/v1/chat/completions";  // nothing listens
  config.model_id = "test-model";
  config.timeout_seconds = 1;
  config.backoff_base_ms = 1;
  HttpBackend backend(config);
  auto r = backend.complete(simple_prompt(Stage::plan, "x"));
  REQUIRE(!r.ok());
  CHECK(r.error().code == ErrorCode::transport);
}
