#include <cstdio>
#include <cstdlib>
#include <string>

#include "doctest.h"
#include "strot/util.hpp"
#include "support.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string out_path = "/tmp/strot_cli_test_out.txt";
  const std::string command =
      "'" + testsupport::cli_path() + "' " + args + " > " + out_path + " 2>&1";
  int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (auto text = strot::read_file(out_path)) result.output = *text;
  std::remove(out_path.c_str());
  return result;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST_CASE("cli profile prints the schema and its digest") {
  auto r = run_cli("profile " + q(testsupport::fixture_path("covid.csv")));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("dataset: ") != std::string::npos);
  CHECK(r.output.find("- WHO Region (categorical") != std::string::npos);
  CHECK(r.output.find("digest: ") != std::string::npos);
}

TEST_CASE("cli usage problems exit with the usage code") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("profile /no/such/file.csv").exit_code == 2);
  CHECK(run_cli("ask " + q(testsupport::fixture_path("covid.csv")) +
                " 'query' --backend scripted")
            .exit_code == 2);  // scripted needs --fixtures
}

TEST_CASE("cli ask succeeds against scripted fixtures and writes a transcript") {
  const std::string transcript_path = "/tmp/strot_cli_transcript.jsonl";
  auto r = run_cli(
      "ask " + q(testsupport::fixture_path("covid.csv")) +
      " 'Generate an Analysis comparing deaths versus new cases for WHO Region.'"
      " --backend scripted --fixtures " +
      q(testsupport::fixture_path("scripted/who_region_recovery.json")) +
      " --out " + transcript_path);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("Total Deaths") != std::string::npos);
  CHECK(r.output.find("\"labels\"") != std::string::npos);
  CHECK(r.output.find("\"datasets\"") != std::string::npos);

  SUBCASE("replay confirms the stored transcript") {
    auto replay = run_cli("replay " + q(transcript_path) + " --csv " +
                          q(testsupport::fixture_path("covid.csv")));
    CHECK(replay.exit_code == 0);
    CHECK(replay.output.find("0 mismatch(es)") != std::string::npos);
  }
  std::remove(transcript_path.c_str());
}

TEST_CASE("cli ask reports model failure with the failure exit code") {
  const std::string script_path = "/tmp/strot_cli_failing.json";
  REQUIRE(strot::write_file(script_path, R"([
    {"stage": "plan", "response": {
      "steps": ["Group data by WHO Region dimension"],
      "fields_used": ["WHO Region", "deaths"],
      "transformation_type": "group",
      "description": "totals by region"}},
    {"persona": "bad_field", "repeat": true}
  ])"));
  auto r = run_cli("ask " + q(testsupport::fixture_path("covid.csv")) +
                   " 'totals by region' --backend scripted --fixtures " +
                   q(script_path) + " --T 2");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("model failure after 2 refine attempt(s)") !=
        std::string::npos);
  CHECK(r.output.find("E_UNKNOWN_COLUMN") != std::string::npos);
  std::remove(script_path.c_str());
}

TEST_CASE("cli bench reproduces the staged suite rates") {
  const std::string report_path = "/tmp/strot_cli_report.json";
  auto r = run_cli("bench " + q(testsupport::fixture_path("bench/strot_suite.json")) +
                   " --out " + report_path);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("valid: 95.0% (19)") != std::string::npos);
  CHECK(r.output.find("avg plan steps: 3.8") != std::string::npos);

  auto json_text = strot::read_file(report_path);
  REQUIRE(json_text);
  CHECK(json_text->find("\"valid_rate\": 95.0") != std::string::npos);
  std::remove(report_path.c_str());
}
