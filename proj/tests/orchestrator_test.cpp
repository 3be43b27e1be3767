#include <cmath>

#include "doctest.h"
#include "strot/metrics.hpp"
#include "strot/orchestrator.hpp"
#include "support.hpp"

using namespace strot;

namespace {

Dataset covid() {
  static Dataset dataset = [] {
    auto r = load_csv_file(testsupport::fixture_path("covid.csv"));
    REQUIRE(r.ok());
    return r.value();
  }();
  return dataset;
}

UserQuery who_query() {
  return make_query(
             "Generate an Analysis comparing deaths versus new cases for WHO Region.")
      .take();
}

AnalysisPlan who_plan() {
  AnalysisPlan plan;
  plan.steps = {"Filter data to include only Measures fields: 'deaths', 'New cases'",
                "Group data by WHO Region dimension",
                "Calculate sum of 'deaths' and 'New cases' for each WHO Region"};
  plan.fields_used = {"deaths", "New cases", "WHO Region"};
  plan.transformation_type = TransformationType::group;
  plan.description =
      "This analysis compares the total deaths and new cases for each WHO region.";
  return plan;
}

ScriptedBackend backend_from(const std::string& fixture_file) {
  auto script = load_fixtures(testsupport::fixture_path(fixture_file));
  REQUIRE(script.ok());
  return ScriptedBackend(script.take());
}

int attempts_at(const SessionTranscript& transcript, Stage stage) {
  int n = 0;
  for (const auto& attempt : transcript.attempts)
    if (attempt.stage == stage) ++n;
  return n;
}

}  // namespace

TEST_CASE("synthesis prompt restricts the schema to declared fields") {
  auto context = build_context(covid());
  Prompt prompt = render_synthesis_prompt(who_plan(), context);
  CHECK(prompt.stage == Stage::synthesize);

  const std::string text = prompt.render();
  CHECK(text.find("- deaths (") != std::string::npos);
  CHECK(text.find("- New cases (") != std::string::npos);
  CHECK(text.find("- WHO Region (") != std::string::npos);
  CHECK(text.find("- country (") == std::string::npos);
  CHECK(text.find("- recovered (") == std::string::npos);

  CHECK(text.find("\"transformation_type\": \"group\"") != std::string::npos);
  CHECK(text.find("DSL v1.") != std::string::npos);
  CHECK(text.find("### Output Format Constraint") != std::string::npos);

  // A plan declaring nothing recognizable falls back to the full schema
  // rather than sending an empty metadata block.
  AnalysisPlan vague = who_plan();
  vague.fields_used = {"everything"};
  std::string fallback = render_synthesis_prompt(vague, context).render();
  CHECK(fallback.find("- country (") != std::string::npos);
}

TEST_CASE("refine prompt carries program, error, and plan; refuses empty errors") {
  auto context = build_context(covid());
  const std::string program_text = "{\"pipeline\": [\"oops\"]}";

  auto r = render_refine_prompt(program_text, "error[E_UNKNOWN_COLUMN] nope",
                                who_plan(), context);
  REQUIRE(r.ok());
  const std::string text = r.value().render();
  CHECK(r.value().stage == Stage::refine);
  CHECK(text.find("### Prior Program") != std::string::npos);
  CHECK(text.find(program_text) != std::string::npos);
  CHECK(text.find("error[E_UNKNOWN_COLUMN] nope") != std::string::npos);
  CHECK(text.find("\"fields_used\"") != std::string::npos);
  CHECK(text.find("DSL v1.") != std::string::npos);

  auto refused = render_refine_prompt(program_text, "  \n ", who_plan(), context);
  REQUIRE(!refused.ok());
  CHECK(refused.error().code == ErrorCode::empty_input);
}

TEST_CASE("one-shot prompt is flat: names and goal only") {
  auto context = build_context(covid());
  Prompt prompt = render_one_shot_prompt(context, who_query());
  CHECK(prompt.stage == Stage::synthesize);
  const std::string text = prompt.render();
  CHECK(text.find("country, WHO Region, confirmed") != std::string::npos);
  CHECK(text.find("User Goal: ") != std::string::npos);
  // No profile statistics leak into the baseline prompt.
  CHECK(text.find("uniq") == std::string::npos);
  CHECK(text.find("### Analysis Plan") == std::string::npos);
}

TEST_CASE("token accounting matches the worked example") {
  // 1.5K prompt + 0.5K completion at $0.01/$0.03 per 1K is $0.030.
  std::vector<Attempt> attempts(3);
  attempts[0].stage = Stage::plan;
  attempts[0].completion.prompt_tokens = 500;
  attempts[0].completion.completion_tokens = 100;
  attempts[1].stage = Stage::synthesize;
  attempts[1].completion.prompt_tokens = 700;
  attempts[1].completion.completion_tokens = 250;
  attempts[2].stage = Stage::refine;
  attempts[2].completion.prompt_tokens = 300;
  attempts[2].completion.completion_tokens = 150;

  TokenLedger ledger = account_tokens(attempts, default_pricing(), "gpt-4-turbo");
  CHECK(ledger.plan.prompt_tokens == 500);
  CHECK(ledger.synthesize.completion_tokens == 250);
  CHECK(ledger.refine.prompt_tokens == 300);
  CHECK(ledger.total_tokens == 2000);
  REQUIRE(ledger.estimated_cost);
  CHECK(*ledger.estimated_cost == doctest::Approx(0.030).epsilon(1e-12));
  CHECK(ledger.warnings.empty());

  TokenLedger unknown = account_tokens(attempts, default_pricing(), "my-local-llm");
  CHECK(!unknown.estimated_cost);
  REQUIRE(unknown.warnings.size() == 1);
  CHECK(unknown.warnings[0].find("my-local-llm") != std::string::npos);

  TokenLedger empty = account_tokens({}, default_pricing(), "gpt-4-turbo");
  CHECK(empty.total_tokens == 0);
  REQUIRE(empty.estimated_cost);
  CHECK(*empty.estimated_cost == 0.0);
}

TEST_CASE("scripted session runs plan then synthesis to success") {
  ScriptedBackend backend = backend_from("scripted/who_region_happy.json");
  SessionTranscript tr = run_query(who_query(), covid(), backend);

  CHECK(tr.outcome == SessionOutcome::success);
  CHECK(tr.refines_used == 0);
  REQUIRE(tr.attempts.size() == 2);
  CHECK(tr.attempts[0].stage == Stage::plan);
  CHECK(tr.attempts[1].stage == Stage::synthesize);
  REQUIRE(tr.final_plan);
  CHECK(tr.final_plan->transformation_type == TransformationType::group);
  REQUIRE(tr.result);
  CHECK(tr.result->shape == OutputSpec::Shape::chart_series);
  CHECK(tr.result->datasets.size() == 2);
  CHECK(tr.backend_tag == "scripted");
  CHECK(tr.context_digest == context_digest(build_context(covid())));
  CHECK(backend.calls_served() == 2);
  CHECK(tr.totals.total_tokens > 0);
}

TEST_CASE("hallucinated column recovers in exactly one refinement") {
  ScriptedBackend backend = backend_from("scripted/who_region_recovery.json");
  SessionTranscript tr = run_query(who_query(), covid(), backend);

  CHECK(tr.outcome == SessionOutcome::success);
  CHECK(tr.refines_used == 1);
  REQUIRE(tr.attempts.size() == 3);
  CHECK(tr.attempts[1].stage == Stage::synthesize);
  REQUIRE(tr.attempts[1].error);
  CHECK(tr.attempts[1].error->code == ErrorCode::unknown_column);
  CHECK(tr.attempts[1].error->offending_symbol == "newcases");

  // The refine prompt must show the failing program, the rendered trace with
  // its suggestion, and the plan.
  CHECK(tr.attempts[2].stage == Stage::refine);
  const std::string& refine_prompt = tr.attempts[2].prompt_text;
  CHECK(refine_prompt.find("\"newcases\"") != std::string::npos);
  CHECK(refine_prompt.find("E_UNKNOWN_COLUMN") != std::string::npos);
  CHECK(refine_prompt.find("did you mean: New cases") != std::string::npos);
  CHECK(refine_prompt.find("\"fields_used\"") != std::string::npos);
  REQUIRE(tr.result);
  CHECK(tr.result->shape == OutputSpec::Shape::chart_series);
}

TEST_CASE("refinement budget admits one synthesis plus T repairs") {
  for (int T : {0, 1, 2, 3}) {
    std::vector<ScriptFixture> script;
    ScriptFixture plan_fixture;
    plan_fixture.stage = Stage::plan;
    plan_fixture.response = plan_to_json(who_plan()).dump();
    script.push_back(plan_fixture);
    ScriptFixture always_bad;
    always_bad.persona = Persona::bad_field;
    always_bad.repeat = true;
    script.push_back(always_bad);

    ScriptedBackend backend(script);
    SessionOptions options;
    options.max_refines = T;
    SessionTranscript tr = run_query(who_query(), covid(), backend, options);

    CHECK(tr.outcome == SessionOutcome::model_failure);
    CHECK(tr.refines_used == T);
    CHECK(attempts_at(tr, Stage::synthesize) == 1);
    CHECK(attempts_at(tr, Stage::refine) == T);
    CHECK(backend.calls_served() == static_cast<std::size_t>(1 + 1 + T));
    REQUIRE(tr.failure);
    CHECK(tr.failure->code == ErrorCode::unknown_column);
    CHECK(!tr.result);
  }
}

TEST_CASE("later refine prompts count the earlier failures") {
  std::vector<ScriptFixture> script;
  ScriptFixture plan_fixture;
  plan_fixture.stage = Stage::plan;
  plan_fixture.response = plan_to_json(who_plan()).dump();
  script.push_back(plan_fixture);
  ScriptFixture always_bad;
  always_bad.persona = Persona::bad_field;
  always_bad.repeat = true;
  script.push_back(always_bad);

  ScriptedBackend backend(script);
  SessionTranscript tr = run_query(who_query(), covid(), backend);
  REQUIRE(tr.attempts.size() == 5);  // plan, synth, three refines
  CHECK(tr.attempts[2].prompt_text.find("earlier failed attempts") ==
        std::string::npos);
  CHECK(tr.attempts[3].prompt_text.find("earlier failed attempts: 1") !=
        std::string::npos);
  CHECK(tr.attempts[4].prompt_text.find("earlier failed attempts: 2") !=
        std::string::npos);
}

TEST_CASE("a failed plan parse re-enters planning exactly once") {
  std::vector<ScriptFixture> script;
  ScriptFixture bad_plan;
  bad_plan.stage = Stage::plan;
  bad_plan.persona = Persona::malformed_object;
  script.push_back(bad_plan);
  ScriptFixture good_plan;
  good_plan.stage = Stage::plan;
  good_plan.response = plan_to_json(who_plan()).dump();
  script.push_back(good_plan);
  ScriptFixture program;
  program.stage = Stage::synthesize;
  program.response = R"({
    "pipeline": [{"op": "group_by", "keys": ["WHO Region"], "aggregations": [
      {"column": "deaths", "agg": "sum", "alias": "total_deaths"},
      {"column": "New cases", "agg": "sum", "alias": "total_new_cases"}]}],
    "output": {"shape": "chart_series", "label_column": "WHO Region", "series": [
      {"label": "Total Deaths", "column": "total_deaths"},
      {"label": "New Cases", "column": "total_new_cases"}]}
  })";
  script.push_back(program);

  ScriptedBackend backend(script);
  SessionTranscript tr = run_query(who_query(), covid(), backend);
  CHECK(tr.outcome == SessionOutcome::success);
  CHECK(attempts_at(tr, Stage::plan) == 2);
  REQUIRE(tr.attempts[0].error);
  CHECK(tr.attempts[0].error->code == ErrorCode::malformed_object);
  CHECK(tr.refines_used == 0);
}

TEST_CASE("two failed plans end the session as a model failure") {
  std::vector<ScriptFixture> script;
  for (int i = 0; i < 2; ++i) {
    ScriptFixture bad;
    bad.stage = Stage::plan;
    bad.persona = Persona::malformed_object;
    script.push_back(bad);
  }
  ScriptedBackend backend(script);
  SessionTranscript tr = run_query(who_query(), covid(), backend);
  CHECK(tr.outcome == SessionOutcome::model_failure);
  CHECK(tr.attempts.size() == 2);
  CHECK(backend.calls_served() == 2);
  REQUIRE(tr.failure);
  CHECK(tr.failure->code == ErrorCode::malformed_object);
}

TEST_CASE("infrastructure failures never consume the refine budget") {
  ScriptedBackend empty_script{std::vector<ScriptFixture>{}};
  SessionTranscript tr = run_query(who_query(), covid(), empty_script);
  CHECK(tr.outcome == SessionOutcome::infrastructure_failure);
  CHECK(tr.refines_used == 0);
  REQUIRE(tr.failure);
  CHECK(tr.failure->code == ErrorCode::script_exhausted);

  // Exhaustion mid-session: plan succeeds, synthesis has no fixture left.
  std::vector<ScriptFixture> only_plan;
  ScriptFixture plan_fixture;
  plan_fixture.stage = Stage::plan;
  plan_fixture.response = plan_to_json(who_plan()).dump();
  only_plan.push_back(plan_fixture);
  ScriptedBackend starved(only_plan);
  SessionTranscript mid = run_query(who_query(), covid(), starved);
  CHECK(mid.outcome == SessionOutcome::infrastructure_failure);
  CHECK(mid.refines_used == 0);
  CHECK(mid.final_plan.has_value());
}

TEST_CASE("empty queries fail before any model call") {
  ScriptedBackend backend{std::vector<ScriptFixture>{}};
  SessionTranscript tr = run_query(UserQuery{"   "}, covid(), backend);
  CHECK(tr.outcome == SessionOutcome::infrastructure_failure);
  REQUIRE(tr.failure);
  CHECK(tr.failure->code == ErrorCode::invalid_query);
  CHECK(backend.calls_served() == 0);
  CHECK(tr.attempts.empty());
}

TEST_CASE("one-shot mode is a single call with no repair") {
  const char* program = R"({
    "pipeline": [{"op": "group_by", "keys": ["WHO Region"], "aggregations": [
      {"column": "deaths", "agg": "sum", "alias": "total_deaths"}]}],
    "output": {"shape": "table"}
  })";

  ScriptFixture fixture;
  fixture.response = program;
  ScriptedBackend backend({fixture});
  SessionOptions options;
  options.one_shot = true;
  SessionTranscript tr = run_query(who_query(), covid(), backend, options);
  CHECK(tr.outcome == SessionOutcome::success);
  CHECK(tr.attempts.size() == 1);
  CHECK(!tr.final_plan);
  CHECK(tr.refines_used == 0);

  ScriptFixture bad;
  bad.persona = Persona::bad_field;
  bad.repeat = true;
  ScriptedBackend failing({bad});
  SessionTranscript lost = run_query(who_query(), covid(), failing, options);
  CHECK(lost.outcome == SessionOutcome::model_failure);
  CHECK(lost.attempts.size() == 1);
  CHECK(failing.calls_served() == 1);
}

TEST_CASE("empty completions consume the budget like any bad program") {
  std::vector<ScriptFixture> script;
  ScriptFixture plan_fixture;
  plan_fixture.stage = Stage::plan;
  plan_fixture.response = plan_to_json(who_plan()).dump();
  script.push_back(plan_fixture);
  ScriptFixture silent;
  silent.persona = Persona::empty;
  silent.repeat = true;
  script.push_back(silent);

  ScriptedBackend backend(script);
  SessionOptions options;
  options.max_refines = 2;
  SessionTranscript tr = run_query(who_query(), covid(), backend, options);
  CHECK(tr.outcome == SessionOutcome::model_failure);
  CHECK(tr.refines_used == 2);
  REQUIRE(tr.failure);
  CHECK(tr.failure->code == ErrorCode::empty_completion);
}

TEST_CASE("transcripts serialize to stable jsonl and parse back") {
  ScriptedBackend backend = backend_from("scripted/who_region_recovery.json");
  SessionTranscript tr = run_query(who_query(), covid(), backend);
  REQUIRE(tr.outcome == SessionOutcome::success);
  tr.dataset_path = "fixtures/covid.csv";

  const std::string jsonl = transcript_to_jsonl(tr);
  CHECK(jsonl.find("\"latency") == std::string::npos);

  auto back = transcript_from_jsonl(jsonl);
  REQUIRE(back.ok());
  CHECK(back.value().query == tr.query);
  CHECK(back.value().outcome == tr.outcome);
  CHECK(back.value().refines_used == 1);
  CHECK(back.value().attempts.size() == 3);
  CHECK(back.value().context_digest == tr.context_digest);
  REQUIRE(back.value().final_plan);
  CHECK(*back.value().final_plan == *tr.final_plan);

  // Round trip is byte stable.
  CHECK(transcript_to_jsonl(back.value()) == jsonl);

  // And a second identical run serializes to identical bytes.
  ScriptedBackend again = backend_from("scripted/who_region_recovery.json");
  SessionTranscript tr2 = run_query(who_query(), covid(), again);
  tr2.dataset_path = "fixtures/covid.csv";
  CHECK(transcript_to_jsonl(tr2) == jsonl);

  CHECK(!transcript_from_jsonl("not json\n").ok());
  CHECK(transcript_from_jsonl("{\"record\": \"attempt\"}\n").error().code ==
        ErrorCode::malformed_object);
}

TEST_CASE("out-of-band decoding policies are flagged in the ledger") {
  ScriptedBackend backend = backend_from("scripted/who_region_happy.json");
  SessionOptions options;
  options.policy.plan_temperature = 0.9;
  SessionTranscript tr = run_query(who_query(), covid(), backend, options);
  REQUIRE(!tr.totals.warnings.empty());
  CHECK(tr.totals.warnings[0].find("plan") != std::string::npos);
}
