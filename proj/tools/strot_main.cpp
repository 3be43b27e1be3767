#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "strot/metrics.hpp"
#include "strot/orchestrator.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitModelFailure = 1;
constexpr int kExitUsage = 2;

int fail(const strot::ErrorTrace& trace) {
  std::fprintf(stderr, "%s\n", strot::render_error(trace).c_str());
  return kExitUsage;
}

int cmd_profile(const std::string& csv_path, std::size_t k, std::uint64_t seed) {
  auto dataset = strot::load_csv_file(csv_path);
  if (!dataset.ok()) return fail(dataset.error());

  strot::ProfilerConfig config;
  config.sample_count = k;
  config.seed = seed;
  auto context = strot::build_context(dataset.value(), config);
  std::fputs(strot::render_context(context, config).c_str(), stdout);
  std::printf("digest: %s\n", strot::context_digest(context).c_str());
  return kExitSuccess;
}

int cmd_ask(const std::string& csv_path, const std::string& query_text,
            const std::string& backend_kind, const std::string& fixtures_path,
            int max_refines, bool one_shot, const std::string& out_path,
            const std::string& endpoint, const std::string& model,
            const std::string& price_as) {
  auto dataset = strot::load_csv_file(csv_path);
  if (!dataset.ok()) return fail(dataset.error());
  auto query = strot::make_query(query_text);
  if (!query.ok()) return fail(query.error());

  std::unique_ptr<strot::CompletionBackend> backend;
  if (backend_kind == "scripted") {
    if (fixtures_path.empty()) {
      std::fprintf(stderr, "--backend scripted needs --fixtures <file>\n");
      return kExitUsage;
    }
    auto fixtures = strot::load_fixtures(fixtures_path);
    if (!fixtures.ok()) return fail(fixtures.error());
    backend = std::make_unique<strot::ScriptedBackend>(fixtures.take());
  } else if (backend_kind == "http") {
    if (endpoint.empty() || model.empty()) {
      std::fprintf(stderr, "--backend http needs --endpoint and --model\n");
      return kExitUsage;
    }
    strot::BackendConfig config;
    config.endpoint = endpoint;
    config.model_id = model;
    const char* key = std::getenv("STROT_API_KEY");
    if (key) config.api_key.value = key;
    backend = std::make_unique<strot::HttpBackend>(config);
  } else {
    std::fprintf(stderr, "unknown backend '%s' (use scripted or http)\n",
                 backend_kind.c_str());
    return kExitUsage;
  }

  strot::SessionOptions options;
  options.max_refines = max_refines;
  options.one_shot = one_shot;
  options.price_model = price_as;

  strot::SessionTranscript tr =
      strot::run_query(query.value(), dataset.value(), *backend, options);
  tr.dataset_path = csv_path;

  if (!out_path.empty()) {
    if (!strot::write_file(out_path, strot::transcript_to_jsonl(tr))) {
      std::fprintf(stderr, "cannot write transcript to '%s'\n", out_path.c_str());
      return kExitUsage;
    }
  }

  for (const auto& warning : tr.totals.warnings) {
    std::fprintf(stderr, "warning: %s\n", warning.c_str());
  }

  switch (tr.outcome) {
    case strot::SessionOutcome::success:
      std::printf("%s\n", strot::payload_to_json(*tr.result).dump(2).c_str());
      return kExitSuccess;
    case strot::SessionOutcome::model_failure:
      std::fprintf(stderr, "model failure after %d refine attempt(s)\n%s\n",
                   tr.refines_used,
                   tr.failure ? strot::render_error(*tr.failure).c_str() : "");
      return kExitModelFailure;
    case strot::SessionOutcome::infrastructure_failure:
      std::fprintf(stderr, "infrastructure failure\n%s\n",
                   tr.failure ? strot::render_error(*tr.failure).c_str() : "");
      return kExitUsage;
  }
  return kExitUsage;
}

int cmd_replay(const std::string& transcript_path, const std::string& csv_override) {
  auto text = strot::read_file(transcript_path);
  if (!text) {
    std::fprintf(stderr, "cannot read transcript '%s'\n", transcript_path.c_str());
    return kExitUsage;
  }
  auto loaded = strot::transcript_from_jsonl(*text);
  if (!loaded.ok()) return fail(loaded.error());
  const strot::SessionTranscript& tr = loaded.value();

  std::string csv_path = csv_override;
  if (csv_path.empty() && tr.dataset_path) csv_path = *tr.dataset_path;
  if (csv_path.empty()) {
    std::fprintf(stderr, "transcript stores no dataset path; pass --csv\n");
    return kExitUsage;
  }
  auto dataset = strot::load_csv_file(csv_path);
  if (!dataset.ok()) return fail(dataset.error());

  auto context = strot::build_context(dataset.value());
  if (!tr.context_digest.empty() &&
      strot::context_digest(context) != tr.context_digest) {
    std::fprintf(stderr, "dataset does not match transcript (context digest differs)\n");
    return kExitUsage;
  }

  std::size_t replayed = 0;
  std::size_t mismatches = 0;
  for (const auto& attempt : tr.attempts) {
    if (!attempt.program) continue;
    ++replayed;

    std::string recorded;
    if (attempt.payload) {
      recorded = strot::payload_to_json(*attempt.payload).dump();
    } else if (attempt.error) {
      recorded = strot::error_to_json(*attempt.error).dump();
    }

    std::string replayed_outcome;
    std::optional<strot::ErrorTrace> mismatch;
    if (tr.final_plan) {
      mismatch = strot::validate_against_plan(*attempt.program, *tr.final_plan);
    }
    if (mismatch) {
      replayed_outcome = strot::error_to_json(*mismatch).dump();
    } else {
      auto payload = strot::execute(*attempt.program, dataset.value());
      replayed_outcome = payload.ok()
                             ? strot::payload_to_json(payload.value()).dump()
                             : strot::error_to_json(payload.error()).dump();
    }

    if (replayed_outcome != recorded) {
      ++mismatches;
      std::fprintf(stderr, "attempt %d diverged:\n  recorded: %s\n  replayed: %s\n",
                   attempt.t, recorded.c_str(), replayed_outcome.c_str());
    }
  }

  std::printf("replayed %zu program(s), %zu mismatch(es)\n", replayed, mismatches);
  return mismatches == 0 ? kExitSuccess : kExitModelFailure;
}

int cmd_bench(const std::string& suite_path, const std::string& out_path) {
  auto suite = strot::load_suite(suite_path);
  if (!suite.ok()) return fail(suite.error());
  auto report = strot::run_suite(suite.value());
  if (!report.ok()) return fail(report.error());

  std::fputs(strot::report_to_text(report.value()).c_str(), stdout);
  if (!out_path.empty()) {
    std::string body = strot::report_to_json(report.value()).dump(2);
    body += '\n';
    if (!strot::write_file(out_path, body)) {
      std::fprintf(stderr, "cannot write report to '%s'\n", out_path.c_str());
      return kExitUsage;
    }
  }
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"schema-grounded tabular query sessions"};
  app.require_subcommand(1);

  std::string csv_path, query_text, fixtures_path, out_path;
  std::string backend_kind = "scripted";
  std::string endpoint, model, price_as;
  std::string transcript_path, csv_override, suite_path;
  std::size_t k = 5;
  std::uint64_t seed = 42;
  int max_refines = 3;
  bool one_shot = false;

  auto* profile = app.add_subcommand("profile", "print a dataset's schema context");
  profile->add_option("csv", csv_path, "CSV file")->required();
  profile->add_option("--k", k, "sample values per column");
  profile->add_option("--seed", seed, "sampling seed");

  auto* ask = app.add_subcommand("ask", "run one query session");
  ask->add_option("csv", csv_path, "CSV file")->required();
  ask->add_option("query", query_text, "natural-language goal")->required();
  ask->add_option("--backend", backend_kind, "scripted or http");
  ask->add_option("--fixtures", fixtures_path, "scripted fixture file");
  ask->add_option("--T", max_refines, "refinement budget");
  ask->add_flag("--one-shot", one_shot, "single flat prompt, no plan or refinement");
  ask->add_option("--out", out_path, "write the session transcript here");
  ask->add_option("--endpoint", endpoint, "chat-completions URL (http backend)");
  ask->add_option("--model", model, "model id (http backend)");
  ask->add_option("--price-as", price_as, "price the session as this model id");

  auto* replay = app.add_subcommand("replay", "re-execute a stored transcript");
  replay->add_option("transcript", transcript_path, "transcript JSONL")->required();
  replay->add_option("--csv", csv_override, "dataset override");

  auto* bench = app.add_subcommand("bench", "run a scripted benchmark suite");
  bench->add_option("suite", suite_path, "suite JSON file")->required();
  bench->add_option("--out", out_path, "write the structured report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (profile->parsed()) return cmd_profile(csv_path, k, seed);
  if (ask->parsed()) {
    return cmd_ask(csv_path, query_text, backend_kind, fixtures_path, max_refines,
                   one_shot, out_path, endpoint, model, price_as);
  }
  if (replay->parsed()) return cmd_replay(transcript_path, csv_override);
  if (bench->parsed()) return cmd_bench(suite_path, out_path);
  return kExitUsage;
}
