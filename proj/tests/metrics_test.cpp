#include "doctest.h"
#include "strot/metrics.hpp"
#include "support.hpp"

using namespace strot;

namespace {

SessionTranscript session(SessionOutcome outcome, int refines,
                          std::size_t plan_steps) {
  SessionTranscript tr;
  tr.query = "q";
  tr.outcome = outcome;
  tr.refines_used = refines;
  if (plan_steps > 0) {
    AnalysisPlan plan;
    for (std::size_t i = 0; i < plan_steps; ++i) plan.steps.push_back("step");
    plan.fields_used = {"deaths"};
    plan.description = "d";
    tr.final_plan = plan;
  }
  tr.totals.total_tokens = 100;
  return tr;
}

}  // namespace

TEST_CASE("rates follow the valid/first-attempt/recovered definitions") {
  std::vector<SessionTranscript> sessions;
  for (int i = 0; i < 17; ++i)
    sessions.push_back(session(SessionOutcome::success, 0, 3));
  sessions.push_back(session(SessionOutcome::success, 1, 4));
  sessions.push_back(session(SessionOutcome::success, 2, 4));
  sessions.push_back(session(SessionOutcome::model_failure, 3, 5));

  BenchReport report = compute_metrics(sessions);
  CHECK(report.total_sessions == 20);
  CHECK(report.valid_sessions == 19);
  CHECK(report.first_attempt_sessions == 17);
  CHECK(report.recovered_sessions == 2);
  CHECK(report.valid_rate == 95.0);
  CHECK(report.first_attempt_rate == 85.0);
  CHECK(report.recovered_rate == 10.0);
  CHECK(report.valid_rate - report.first_attempt_rate == report.recovered_rate);
  REQUIRE(report.avg_plan_steps);
  CHECK(*report.avg_plan_steps ==
        doctest::Approx((17.0 * 3 + 4 + 4 + 5) / 20.0).epsilon(1e-12));
  CHECK(report.total_tokens == 2000);
  CHECK(report.rows.size() == 20);
  CHECK(report.rows[0].outcome == "success");
  CHECK(report.rows[19].outcome == "model_failure");

  BenchReport empty = compute_metrics({});
  CHECK(empty.total_sessions == 0);
  CHECK(empty.valid_rate == 0.0);
  CHECK(!empty.avg_plan_steps);
}

TEST_CASE("suite files load with path resolution and validation") {
  auto suite = load_suite(testsupport::fixture_path("bench/strot_suite.json"));
  REQUIRE(suite.ok());
  CHECK(!suite.value().one_shot);
  CHECK(suite.value().max_refines == 3);
  CHECK(suite.value().entries.size() == 20);
  // Relative paths are anchored at the suite file's directory.
  CHECK(suite.value().dataset_path.find("bench/../covid.csv") != std::string::npos);
  CHECK(load_csv_file(suite.value().dataset_path).ok());

  CHECK(load_suite("/no/such/suite.json").error().code == ErrorCode::io_error);
}

TEST_CASE("staged suite reproduces its designed quality rates") {
  auto suite = load_suite(testsupport::fixture_path("bench/strot_suite.json"));
  REQUIRE(suite.ok());
  std::vector<SessionTranscript> transcripts;
  auto report = run_suite(suite.value(), &transcripts);
  REQUIRE(report.ok());

  CHECK(report.value().total_sessions == 20);
  CHECK(report.value().valid_rate == 95.0);
  CHECK(report.value().first_attempt_rate == 85.0);
  CHECK(report.value().recovered_rate == 10.0);
  REQUIRE(report.value().avg_plan_steps);
  CHECK(*report.value().avg_plan_steps == doctest::Approx(3.8).epsilon(1e-12));
  CHECK(!report.value().estimated_cost);  // scripted runs have no price

  REQUIRE(transcripts.size() == 20);
  for (const auto& tr : transcripts) {
    CHECK(tr.dataset_path.has_value());
    CHECK(tr.totals.total_tokens > 0);
  }

  const std::string text = report_to_text(report.value());
  CHECK(text.find("valid: 95.0% (19)") != std::string::npos);
  CHECK(text.find("first attempt: 85.0% (17)") != std::string::npos);
  CHECK(text.find("recovered: 10.0% (2)") != std::string::npos);
  CHECK(text.find("avg plan steps: 3.8") != std::string::npos);
  CHECK(text.find("query | outcome | refines | steps | tokens") !=
        std::string::npos);

  ojson j = report_to_json(report.value());
  CHECK(j["valid_rate"] == 95.0);
  CHECK(j["rows"].size() == 20);
}

TEST_CASE("flat baseline suite lands at its designed rates with no recovery") {
  auto suite = load_suite(testsupport::fixture_path("bench/one_shot_suite.json"));
  REQUIRE(suite.ok());
  CHECK(suite.value().one_shot);
  auto report = run_suite(suite.value());
  REQUIRE(report.ok());

  CHECK(report.value().total_sessions == 20);
  CHECK(report.value().valid_rate == 65.0);
  CHECK(report.value().first_attempt_rate == 65.0);
  CHECK(report.value().recovered_rate == 0.0);
  CHECK(!report.value().avg_plan_steps);  // no plans exist in this mode
}

TEST_CASE("suite rejects unknown modes") {
  const std::string path = "/tmp/strot_bad_suite.json";
  REQUIRE(write_file(path,
                     R"({"dataset": "x.csv", "mode": "parallel", "entries": []})"));
  auto r = load_suite(path);
  REQUIRE(!r.ok());
  CHECK(r.error().code == ErrorCode::malformed_object);
  CHECK(r.error().message.find("parallel") != std::string::npos);
}
