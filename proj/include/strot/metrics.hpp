#pragma once

#include <optional>
#include <string>
#include <vector>

#include "strot/orchestrator.hpp"

namespace strot {

// One line per session in the detailed report. The plan description rides
// along so a human can judge plan quality from the report alone.
struct BenchRow {
  std::string query;
  std::string outcome;
  int refines_used = 0;
  std::optional<std::size_t> plan_steps;
  std::size_t total_tokens = 0;
  std::string description;
};

// Aggregate quality numbers over a batch of sessions. Percentages are stored
// unrounded; rendering rounds to one decimal. With this definition
// valid_rate - first_attempt_rate == recovered_rate holds exactly, since a
// valid session either succeeded on the first try or recovered later.
struct BenchReport {
  std::size_t total_sessions = 0;
  std::size_t valid_sessions = 0;        // outcome == success
  std::size_t first_attempt_sessions = 0;  // success with zero refines
  std::size_t recovered_sessions = 0;      // success after at least one refine
  double valid_rate = 0.0;            // percent
  double first_attempt_rate = 0.0;    // percent
  double recovered_rate = 0.0;        // percent
  std::optional<double> avg_plan_steps;  // over sessions that produced a plan
  std::size_t total_tokens = 0;
  std::optional<double> estimated_cost;  // summed; absent if any session lacks one
  std::vector<BenchRow> rows;
};

BenchReport compute_metrics(const std::vector<SessionTranscript>& transcripts);

// One benchmark entry: a query plus the scripted fixtures that answer it.
struct BenchEntry {
  std::string query;
  std::string fixtures_path;
};

struct BenchSuite {
  std::string dataset_path;
  bool one_shot = false;
  int max_refines = 3;
  std::uint64_t seed = 42;  // profiler sampling seed, shared by every entry
  std::vector<BenchEntry> entries;
};

// Suite file: {"dataset": path, "mode": "strot"|"one_shot", "T": n, "seed": n,
// "entries": [{"query": ..., "fixtures": path}, ...]}. Relative paths resolve
// against the suite file's directory.
Result<BenchSuite> load_suite(const std::string& path);

// Runs every entry sequentially against its own scripted backend and reports.
Result<BenchReport> run_suite(const BenchSuite& suite,
                              std::vector<SessionTranscript>* transcripts = nullptr);

std::string report_to_text(const BenchReport& report);
ojson report_to_json(const BenchReport& report);

}  // namespace strot
