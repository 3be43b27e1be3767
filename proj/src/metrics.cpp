#include "strot/metrics.hpp"

#include <cstdio>
#include <filesystem>

#include "strot/util.hpp"

namespace strot {

BenchReport compute_metrics(const std::vector<SessionTranscript>& transcripts) {
  BenchReport report;
  report.total_sessions = transcripts.size();

  std::size_t plan_sessions = 0;
  std::size_t plan_steps = 0;
  bool cost_known = true;

  for (const auto& tr : transcripts) {
    if (tr.outcome == SessionOutcome::success) {
      ++report.valid_sessions;
      if (tr.refines_used == 0) {
        ++report.first_attempt_sessions;
      } else {
        ++report.recovered_sessions;
      }
    }
    BenchRow row;
    row.query = tr.query;
    row.outcome = session_outcome_name(tr.outcome);
    row.refines_used = tr.refines_used;
    row.total_tokens = tr.totals.total_tokens;
    if (tr.final_plan) {
      ++plan_sessions;
      plan_steps += plan_step_count(*tr.final_plan);
      row.plan_steps = plan_step_count(*tr.final_plan);
      row.description = tr.final_plan->description;
    }
    report.rows.push_back(std::move(row));
    report.total_tokens += tr.totals.total_tokens;
    if (tr.totals.estimated_cost) {
      report.estimated_cost =
          report.estimated_cost.value_or(0.0) + *tr.totals.estimated_cost;
    } else {
      cost_known = false;
    }
  }

  if (!cost_known) report.estimated_cost = std::nullopt;
  if (plan_sessions > 0) {
    report.avg_plan_steps =
        static_cast<double>(plan_steps) / static_cast<double>(plan_sessions);
  }
  if (report.total_sessions > 0) {
    const double n = static_cast<double>(report.total_sessions);
    report.valid_rate = 100.0 * static_cast<double>(report.valid_sessions) / n;
    report.first_attempt_rate =
        100.0 * static_cast<double>(report.first_attempt_sessions) / n;
    report.recovered_rate = 100.0 * static_cast<double>(report.recovered_sessions) / n;
  }
  return report;
}

Result<BenchSuite> load_suite(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    return ErrorTrace{ErrorCode::io_error, "cannot read suite file '" + path + "'"};
  }

  ojson j = ojson::parse(*text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return ErrorTrace{ErrorCode::malformed_object, "suite file is not a JSON object"};
  }
  for (const char* key : {"dataset", "entries"}) {
    if (!j.contains(key)) {
      return ErrorTrace{ErrorCode::missing_key,
                        std::string("suite file lacks required key '") + key + "'",
                        std::nullopt, key};
    }
  }
  if (!j["dataset"].is_string() || !j["entries"].is_array()) {
    return ErrorTrace{ErrorCode::malformed_object,
                      "'dataset' must be a string and 'entries' an array"};
  }

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return fp.string();
    return (base / fp).string();
  };

  BenchSuite suite;
  suite.dataset_path = resolve(j["dataset"].get<std::string>());
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) {
      return ErrorTrace{ErrorCode::malformed_object, "'mode' must be a string"};
    }
    const std::string mode = j["mode"].get<std::string>();
    if (mode == "one_shot") {
      suite.one_shot = true;
    } else if (mode != "strot") {
      return ErrorTrace{ErrorCode::malformed_object,
                        "'mode' must be 'strot' or 'one_shot', got '" + mode + "'"};
    }
  }
  if (j.contains("T")) {
    if (!j["T"].is_number_integer() || j["T"].get<int>() < 0) {
      return ErrorTrace{ErrorCode::malformed_object,
                        "'T' must be a non-negative integer"};
    }
    suite.max_refines = j["T"].get<int>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) {
      return ErrorTrace{ErrorCode::malformed_object,
                        "'seed' must be a non-negative integer"};
    }
    suite.seed = j["seed"].get<std::uint64_t>();
  }

  for (const auto& entry : j["entries"]) {
    if (!entry.is_object() || !entry.contains("query") || !entry["query"].is_string() ||
        !entry.contains("fixtures") || !entry["fixtures"].is_string()) {
      return ErrorTrace{ErrorCode::malformed_object,
                        "each entry needs 'query' and 'fixtures' strings"};
    }
    suite.entries.push_back(
        {entry["query"].get<std::string>(), resolve(entry["fixtures"].get<std::string>())});
  }
  if (suite.entries.empty()) {
    return ErrorTrace{ErrorCode::empty_input, "suite has no entries"};
  }
  return suite;
}

Result<BenchReport> run_suite(const BenchSuite& suite,
                              std::vector<SessionTranscript>* transcripts) {
  auto dataset = load_csv_file(suite.dataset_path);
  if (!dataset.ok()) return dataset.error();

  std::vector<SessionTranscript> local;
  for (const auto& entry : suite.entries) {
    auto fixtures = load_fixtures(entry.fixtures_path);
    if (!fixtures.ok()) return fixtures.error();
    auto query = make_query(entry.query);
    if (!query.ok()) return query.error();

    ScriptedBackend backend(fixtures.take());
    SessionOptions options;
    options.max_refines = suite.max_refines;
    options.one_shot = suite.one_shot;
    options.profiler.seed = suite.seed;
    SessionTranscript tr = run_query(query.value(), dataset.value(), backend, options);
    tr.dataset_path = suite.dataset_path;
    local.push_back(std::move(tr));
  }

  BenchReport report = compute_metrics(local);
  if (transcripts) *transcripts = std::move(local);
  return report;
}

std::string report_to_text(const BenchReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "sessions: %zu\n", report.total_sessions);
  out += buf;
  std::snprintf(buf, sizeof(buf), "valid: %.1f%% (%zu)\n", report.valid_rate,
                report.valid_sessions);
  out += buf;
  std::snprintf(buf, sizeof(buf), "first attempt: %.1f%% (%zu)\n",
                report.first_attempt_rate, report.first_attempt_sessions);
  out += buf;
  std::snprintf(buf, sizeof(buf), "recovered: %.1f%% (%zu)\n", report.recovered_rate,
                report.recovered_sessions);
  out += buf;
  if (report.avg_plan_steps) {
    std::snprintf(buf, sizeof(buf), "avg plan steps: %.1f\n", *report.avg_plan_steps);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "total tokens: %zu\n", report.total_tokens);
  out += buf;
  if (report.estimated_cost) {
    std::snprintf(buf, sizeof(buf), "estimated cost: $%.4f\n", *report.estimated_cost);
    out += buf;
  }
  if (!report.rows.empty()) {
    out += "\nquery | outcome | refines | steps | tokens\n";
    for (const auto& row : report.rows) {
      std::string steps = row.plan_steps ? std::to_string(*row.plan_steps) : "-";
      std::snprintf(buf, sizeof(buf), " | %s | %d | %s | %zu\n", row.outcome.c_str(),
                    row.refines_used, steps.c_str(), row.total_tokens);
      out += row.query;
      out += buf;
    }
  }
  return out;
}

ojson report_to_json(const BenchReport& report) {
  ojson j;
  j["sessions"] = report.total_sessions;
  j["valid_sessions"] = report.valid_sessions;
  j["first_attempt_sessions"] = report.first_attempt_sessions;
  j["recovered_sessions"] = report.recovered_sessions;
  j["valid_rate"] = report.valid_rate;
  j["first_attempt_rate"] = report.first_attempt_rate;
  j["recovered_rate"] = report.recovered_rate;
  if (report.avg_plan_steps) j["avg_plan_steps"] = *report.avg_plan_steps;
  j["total_tokens"] = report.total_tokens;
  if (report.estimated_cost) j["estimated_cost"] = *report.estimated_cost;
  ojson rows = ojson::array();
  for (const auto& row : report.rows) {
    ojson r;
    r["query"] = row.query;
    r["outcome"] = row.outcome;
    r["refines_used"] = row.refines_used;
    if (row.plan_steps) r["plan_steps"] = *row.plan_steps;
    r["total_tokens"] = row.total_tokens;
    if (!row.description.empty()) r["description"] = row.description;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace strot
