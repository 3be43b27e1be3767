#include "strot/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <utility>

#include "strot/util.hpp"

namespace strot {

namespace {

// Failures of the machinery around the model, as opposed to bad model output.
// These abort a session without consuming the refinement budget.
bool is_infrastructure(ErrorCode code) {
  switch (code) {
    case ErrorCode::transport:
    case ErrorCode::timeout:
    case ErrorCode::auth_failure:
    case ErrorCode::script_exhausted:
    case ErrorCode::io_error:
      return true;
    default:
      return false;
  }
}

SchemaContext restrict_context(const SchemaContext& context,
                               const std::vector<std::string>& fields_used) {
  SchemaContext narrowed;
  narrowed.dataset_name = context.dataset_name;
  narrowed.row_count = context.row_count;
  for (const auto& column : context.columns) {
    if (std::find(fields_used.begin(), fields_used.end(), column.name) !=
        fields_used.end()) {
      narrowed.columns.push_back(column);
    }
  }
  // A plan that somehow names no real column would produce an empty schema
  // section; showing everything beats showing nothing.
  if (narrowed.columns.empty()) return context;
  return narrowed;
}

const char* kSynthConstraint =
    "Return only one valid JSON object in the transformation language above. "
    "No prose, no code fences. Use only columns listed in the schema section "
    "plus names the program itself introduces.";

const char* kRefineConstraint =
    "The prior program failed with the error shown above. Return a complete "
    "corrected program: one valid JSON object in the transformation language. "
    "No prose, no code fences.";

const char* kOneShotConstraint =
    "Return only one valid JSON object in the transformation language above. "
    "No prose, no code fences. Use only the columns listed.";

std::optional<SessionOutcome> session_outcome_from_name(std::string_view name) {
  if (name == "success") return SessionOutcome::success;
  if (name == "model_failure") return SessionOutcome::model_failure;
  if (name == "infrastructure_failure") return SessionOutcome::infrastructure_failure;
  return std::nullopt;
}

}  // namespace

const char* session_outcome_name(SessionOutcome outcome) {
  switch (outcome) {
    case SessionOutcome::success:
      return "success";
    case SessionOutcome::model_failure:
      return "model_failure";
    case SessionOutcome::infrastructure_failure:
      return "infrastructure_failure";
  }
  return "model_failure";
}

const PricingTable& default_pricing() {
  static const PricingTable table = {
      {"gpt-4-turbo", {0.01, 0.03}},
      {"claude-3-opus", {0.015, 0.075}},
      {"claude-3-sonnet", {0.003, 0.015}},
      {"gemini-1.5-pro", {0.125, 0.125}},
  };
  return table;
}

Prompt render_synthesis_prompt(const AnalysisPlan& plan, const SchemaContext& context,
                               const DecodingPolicy& policy,
                               const ProfilerConfig& profiler_config) {
  Prompt prompt;
  prompt.stage = Stage::synthesize;
  prompt.temperature = policy.temperature_for(Stage::synthesize);
  prompt.max_tokens = policy.max_tokens_for(Stage::synthesize);
  prompt.sections.push_back(
      {"Schema Metadata",
       render_context(restrict_context(context, plan.fields_used), profiler_config)});
  prompt.sections.push_back({"Analysis Plan", plan_to_json(plan).dump(2)});
  prompt.sections.push_back({"Transformation Language", dsl_schema_text()});
  prompt.sections.push_back({"Output Format Constraint", kSynthConstraint});
  return prompt;
}

Result<Prompt> render_refine_prompt(const std::string& prior_program_text,
                                    const std::string& error_text,
                                    const AnalysisPlan& plan,
                                    const SchemaContext& context,
                                    const DecodingPolicy& policy) {
  if (trim(error_text).empty()) {
    return ErrorTrace{ErrorCode::empty_input,
                      "refine prompt needs a nonempty error description"};
  }
  (void)context;
  Prompt prompt;
  prompt.stage = Stage::refine;
  prompt.temperature = policy.temperature_for(Stage::refine);
  prompt.max_tokens = policy.max_tokens_for(Stage::refine);
  prompt.sections.push_back({"Prior Program", prior_program_text});
  prompt.sections.push_back({"Execution Error", error_text});
  prompt.sections.push_back({"Analysis Plan", plan_to_json(plan).dump(2)});
  prompt.sections.push_back({"Transformation Language", dsl_schema_text()});
  prompt.sections.push_back({"Output Format Constraint", kRefineConstraint});
  return prompt;
}

Prompt render_one_shot_prompt(const SchemaContext& context, const UserQuery& query,
                              const DecodingPolicy& policy) {
  std::string columns;
  for (const auto& column : context.columns) {
    if (!columns.empty()) columns += ", ";
    columns += column.name;
  }
  Prompt prompt;
  prompt.stage = Stage::synthesize;
  prompt.temperature = policy.temperature_for(Stage::synthesize);
  prompt.max_tokens = policy.max_tokens_for(Stage::synthesize);
  prompt.sections.push_back({"Columns", columns});
  prompt.sections.push_back({"User Instruction", "User Goal: " + query.text});
  prompt.sections.push_back({"Transformation Language", dsl_schema_text()});
  prompt.sections.push_back({"Output Format Constraint", kOneShotConstraint});
  return prompt;
}

TokenLedger account_tokens(const std::vector<Attempt>& attempts,
                           const PricingTable& pricing, const std::string& model_id) {
  TokenLedger ledger;
  for (const auto& attempt : attempts) {
    StageTokens* bucket = nullptr;
    switch (attempt.stage) {
      case Stage::plan:
        bucket = &ledger.plan;
        break;
      case Stage::synthesize:
        bucket = &ledger.synthesize;
        break;
      case Stage::refine:
        bucket = &ledger.refine;
        break;
    }
    bucket->prompt_tokens += attempt.completion.prompt_tokens;
    bucket->completion_tokens += attempt.completion.completion_tokens;
    ledger.total_tokens += attempt.completion.prompt_tokens;
    ledger.total_tokens += attempt.completion.completion_tokens;
  }
  if (ledger.total_tokens == 0) {
    ledger.estimated_cost = 0.0;
    return ledger;
  }
  auto entry = pricing.find(model_id);
  if (entry == pricing.end()) {
    ledger.warnings.push_back("no pricing for model '" + model_id +
                              "' (cost not estimated)");
    return ledger;
  }
  std::size_t prompt_total = ledger.plan.prompt_tokens +
                             ledger.synthesize.prompt_tokens +
                             ledger.refine.prompt_tokens;
  std::size_t completion_total = ledger.plan.completion_tokens +
                                 ledger.synthesize.completion_tokens +
                                 ledger.refine.completion_tokens;
  ledger.estimated_cost =
      static_cast<double>(prompt_total) / 1000.0 * entry->second.input_per_1k +
      static_cast<double>(completion_total) / 1000.0 * entry->second.output_per_1k;
  return ledger;
}

SessionTranscript run_query(const UserQuery& query, const Dataset& dataset,
                            CompletionBackend& backend, const SessionOptions& options) {
  SessionTranscript tr;
  tr.query = query.text;
  tr.dataset_name = dataset.name;
  tr.backend_tag = backend.describe();

  std::vector<std::string> session_warnings = policy_warnings(options.policy);

  auto finalize = [&](SessionOutcome outcome) -> SessionTranscript& {
    tr.outcome = outcome;
    tr.refines_used = 0;
    for (const auto& attempt : tr.attempts) {
      if (attempt.stage == Stage::refine) ++tr.refines_used;
    }
    const std::string& model_id =
        options.price_model.empty() ? tr.backend_tag : options.price_model;
    tr.totals = account_tokens(tr.attempts, options.pricing, model_id);
    tr.totals.warnings.insert(tr.totals.warnings.begin(), session_warnings.begin(),
                              session_warnings.end());
    return tr;
  };

  if (trim(query.text).empty()) {
    tr.failure = ErrorTrace{ErrorCode::invalid_query, "query is empty"};
    return finalize(SessionOutcome::infrastructure_failure);
  }

  SchemaContext context = build_context(dataset, options.profiler);
  tr.context_digest = context_digest(context);

  auto push_attempt = [&](const Prompt& prompt, const Completion& completion) -> Attempt& {
    Attempt attempt;
    attempt.stage = prompt.stage;
    attempt.t = static_cast<int>(tr.attempts.size());
    attempt.prompt_text = prompt.render();
    attempt.completion = completion;
    tr.attempts.push_back(std::move(attempt));
    return tr.attempts.back();
  };

  // A backend call that never produced content: record the trace and stop.
  auto abort_infra = [&](const Prompt& prompt, const ErrorTrace& trace) -> SessionTranscript& {
    Attempt& attempt = push_attempt(prompt, Completion{});
    attempt.error = trace;
    tr.failure = trace;
    return finalize(SessionOutcome::infrastructure_failure);
  };

  std::optional<AnalysisPlan> plan;

  if (!options.one_shot) {
    // A plan the model fumbles gets exactly one free retry; with no program
    // in hand there is nothing for the refinement loop to repair.
    for (int round = 0; round < 2; ++round) {
      Prompt prompt = render_plan_prompt(context, query, options.policy, options.profiler);
      auto completion = backend.complete(prompt);
      if (!completion.ok()) {
        if (is_infrastructure(completion.error().code)) {
          return abort_infra(prompt, completion.error());
        }
        Attempt& attempt = push_attempt(prompt, Completion{});
        attempt.error = completion.error();
        tr.failure = completion.error();
        if (round == 1) return finalize(SessionOutcome::model_failure);
        continue;
      }
      Attempt& attempt = push_attempt(prompt, completion.value());
      if (trim(completion.value().text).empty()) {
        ErrorTrace trace{ErrorCode::empty_completion, "model returned no content"};
        attempt.error = trace;
        tr.failure = trace;
        if (round == 1) return finalize(SessionOutcome::model_failure);
        continue;
      }
      std::vector<std::string> plan_warnings;
      auto parsed = parse_plan(completion.value().text, context, &plan_warnings);
      session_warnings.insert(session_warnings.end(), plan_warnings.begin(),
                              plan_warnings.end());
      if (!parsed.ok()) {
        attempt.error = parsed.error();
        tr.failure = parsed.error();
        if (round == 1) return finalize(SessionOutcome::model_failure);
        continue;
      }
      plan = parsed.take();
      attempt.plan = plan;
      tr.final_plan = plan;
      break;
    }
    if (!plan) return finalize(SessionOutcome::model_failure);
  }

  // Synthesis, then refinement while the budget lasts. `failures` counts
  // model-content faults in this family; the first one is the synthesis
  // attempt itself, so the loop admits 1 + max_refines calls in total.
  int failures = 0;
  std::string prior_program_text;
  std::optional<ErrorTrace> last_error;

  while (true) {
    Prompt prompt;
    if (failures == 0) {
      prompt = options.one_shot
                   ? render_one_shot_prompt(context, query, options.policy)
                   : render_synthesis_prompt(*plan, context, options.policy,
                                             options.profiler);
    } else {
      std::string error_text = render_error(*last_error);
      if (failures > 1) {
        char line[64];
        std::snprintf(line, sizeof(line), "\nearlier failed attempts: %d", failures - 1);
        error_text += line;
      }
      auto rendered = render_refine_prompt(prior_program_text, error_text, *plan,
                                           context, options.policy);
      if (!rendered.ok()) {
        tr.failure = rendered.error();
        return finalize(SessionOutcome::infrastructure_failure);
      }
      prompt = rendered.take();
    }

    auto completion = backend.complete(prompt);
    Completion content;
    ErrorTrace trace;
    bool failed = false;
    if (!completion.ok()) {
      if (is_infrastructure(completion.error().code)) {
        return abort_infra(prompt, completion.error());
      }
      trace = completion.error();
      failed = true;
    } else {
      content = completion.take();
    }

    Attempt& attempt = push_attempt(prompt, content);

    if (!failed && trim(content.text).empty()) {
      trace = ErrorTrace{ErrorCode::empty_completion, "model returned no content"};
      failed = true;
    }
    if (!failed) {
      auto program = parse_program(content.text, context);
      if (!program.ok()) {
        trace = program.error();
        failed = true;
      } else {
        attempt.program = program.value();
        std::optional<ErrorTrace> mismatch;
        if (!options.one_shot) {
          mismatch = validate_against_plan(program.value(), *plan);
        }
        if (mismatch) {
          trace = *mismatch;
          failed = true;
        } else {
          auto payload = execute(program.value(), dataset);
          if (!payload.ok()) {
            trace = payload.error();
            failed = true;
          } else {
            attempt.payload = payload.value();
            tr.result = payload.take();
            return finalize(SessionOutcome::success);
          }
        }
      }
    }

    attempt.error = trace;
    ++failures;
    if (options.one_shot || failures > options.max_refines) {
      tr.failure = trace;
      return finalize(SessionOutcome::model_failure);
    }
    prior_program_text = std::string(trim(content.text));
    last_error = trace;
  }
}

namespace {

ojson stage_tokens_to_json(const StageTokens& tokens) {
  ojson j;
  j["prompt_tokens"] = tokens.prompt_tokens;
  j["completion_tokens"] = tokens.completion_tokens;
  return j;
}

StageTokens stage_tokens_from_json(const ojson& j) {
  StageTokens tokens;
  if (j.is_object()) {
    if (j.contains("prompt_tokens") && j["prompt_tokens"].is_number_unsigned()) {
      tokens.prompt_tokens = j["prompt_tokens"].get<std::size_t>();
    }
    if (j.contains("completion_tokens") && j["completion_tokens"].is_number_unsigned()) {
      tokens.completion_tokens = j["completion_tokens"].get<std::size_t>();
    }
  }
  return tokens;
}

}  // namespace

std::string transcript_to_jsonl(const SessionTranscript& transcript) {
  std::string out;
  for (const auto& attempt : transcript.attempts) {
    ojson line;
    line["record"] = "attempt";
    line["v"] = 1;
    line["t"] = attempt.t;
    line["stage"] = stage_name(attempt.stage);
    line["prompt"] = attempt.prompt_text;
    line["completion"] = attempt.completion.text;
    line["prompt_tokens"] = attempt.completion.prompt_tokens;
    line["completion_tokens"] = attempt.completion.completion_tokens;
    if (attempt.plan) line["plan"] = plan_to_json(*attempt.plan);
    if (attempt.program) line["program"] = program_to_json(*attempt.program);
    if (attempt.error) line["error"] = error_to_json(*attempt.error);
    if (attempt.payload) line["payload"] = payload_to_json(*attempt.payload);
    out += line.dump();
    out += '\n';
  }

  ojson summary;
  summary["record"] = "summary";
  summary["v"] = 1;
  summary["query"] = transcript.query;
  summary["dataset"] = transcript.dataset_name;
  if (transcript.dataset_path) summary["dataset_path"] = *transcript.dataset_path;
  summary["backend"] = transcript.backend_tag;
  summary["context_digest"] = transcript.context_digest;
  summary["outcome"] = session_outcome_name(transcript.outcome);
  summary["refines_used"] = transcript.refines_used;
  if (transcript.final_plan) summary["plan"] = plan_to_json(*transcript.final_plan);
  if (transcript.result) summary["payload"] = payload_to_json(*transcript.result);
  if (transcript.failure) summary["failure"] = error_to_json(*transcript.failure);

  ojson totals;
  totals["plan"] = stage_tokens_to_json(transcript.totals.plan);
  totals["synthesize"] = stage_tokens_to_json(transcript.totals.synthesize);
  totals["refine"] = stage_tokens_to_json(transcript.totals.refine);
  totals["total_tokens"] = transcript.totals.total_tokens;
  if (transcript.totals.estimated_cost) {
    totals["estimated_cost"] = *transcript.totals.estimated_cost;
  }
  if (!transcript.totals.warnings.empty()) {
    totals["warnings"] = transcript.totals.warnings;
  }
  summary["totals"] = std::move(totals);

  out += summary.dump();
  out += '\n';
  return out;
}

Result<SessionTranscript> transcript_from_jsonl(std::string_view text) {
  SessionTranscript transcript;
  bool saw_summary = false;

  std::istringstream in{std::string(text)};
  std::string raw_line;
  std::size_t line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    if (trim(raw_line).empty()) continue;
    ojson line = ojson::parse(raw_line, nullptr, false);
    auto bad = [&](const std::string& detail) -> ErrorTrace {
      char head[48];
      std::snprintf(head, sizeof(head), "transcript line %zu: ", line_no);
      return ErrorTrace{ErrorCode::malformed_object, head + detail};
    };
    if (line.is_discarded() || !line.is_object()) {
      return bad("not a JSON object");
    }
    if (!line.contains("record") || !line["record"].is_string()) {
      return bad("missing 'record' tag");
    }
    const std::string record = line["record"].get<std::string>();

    if (record == "attempt") {
      Attempt attempt;
      if (!line.contains("stage") || !line["stage"].is_string()) {
        return bad("attempt needs a 'stage'");
      }
      auto stage = stage_from_name(line["stage"].get<std::string>());
      if (!stage) return bad("unknown stage '" + line["stage"].get<std::string>() + "'");
      attempt.stage = *stage;
      if (line.contains("t") && line["t"].is_number_integer()) {
        attempt.t = line["t"].get<int>();
      }
      if (line.contains("prompt") && line["prompt"].is_string()) {
        attempt.prompt_text = line["prompt"].get<std::string>();
      }
      if (line.contains("completion") && line["completion"].is_string()) {
        attempt.completion.text = line["completion"].get<std::string>();
      }
      if (line.contains("prompt_tokens") && line["prompt_tokens"].is_number_unsigned()) {
        attempt.completion.prompt_tokens = line["prompt_tokens"].get<std::size_t>();
      }
      if (line.contains("completion_tokens") &&
          line["completion_tokens"].is_number_unsigned()) {
        attempt.completion.completion_tokens =
            line["completion_tokens"].get<std::size_t>();
      }
      if (line.contains("plan")) {
        auto plan = plan_from_json(line["plan"]);
        if (!plan.ok()) return plan.error();
        attempt.plan = plan.take();
      }
      if (line.contains("program")) {
        auto program = program_from_json(line["program"]);
        if (!program.ok()) return program.error();
        attempt.program = program.take();
      }
      if (line.contains("error")) {
        attempt.error = error_from_json(line["error"]);
      }
      if (line.contains("payload")) {
        auto payload = payload_from_json(line["payload"]);
        if (!payload.ok()) return payload.error();
        attempt.payload = payload.take();
      }
      transcript.attempts.push_back(std::move(attempt));
      continue;
    }

    if (record == "summary") {
      saw_summary = true;
      if (line.contains("query") && line["query"].is_string()) {
        transcript.query = line["query"].get<std::string>();
      }
      if (line.contains("dataset") && line["dataset"].is_string()) {
        transcript.dataset_name = line["dataset"].get<std::string>();
      }
      if (line.contains("dataset_path") && line["dataset_path"].is_string()) {
        transcript.dataset_path = line["dataset_path"].get<std::string>();
      }
      if (line.contains("backend") && line["backend"].is_string()) {
        transcript.backend_tag = line["backend"].get<std::string>();
      }
      if (line.contains("context_digest") && line["context_digest"].is_string()) {
        transcript.context_digest = line["context_digest"].get<std::string>();
      }
      if (!line.contains("outcome") || !line["outcome"].is_string()) {
        return bad("summary needs an 'outcome'");
      }
      auto outcome = session_outcome_from_name(line["outcome"].get<std::string>());
      if (!outcome) {
        return bad("unknown outcome '" + line["outcome"].get<std::string>() + "'");
      }
      transcript.outcome = *outcome;
      if (line.contains("refines_used") && line["refines_used"].is_number_integer()) {
        transcript.refines_used = line["refines_used"].get<int>();
      }
      if (line.contains("plan")) {
        auto plan = plan_from_json(line["plan"]);
        if (!plan.ok()) return plan.error();
        transcript.final_plan = plan.take();
      }
      if (line.contains("payload")) {
        auto payload = payload_from_json(line["payload"]);
        if (!payload.ok()) return payload.error();
        transcript.result = payload.take();
      }
      if (line.contains("failure")) {
        transcript.failure = error_from_json(line["failure"]);
      }
      if (line.contains("totals") && line["totals"].is_object()) {
        const auto& totals = line["totals"];
        if (totals.contains("plan")) {
          transcript.totals.plan = stage_tokens_from_json(totals["plan"]);
        }
        if (totals.contains("synthesize")) {
          transcript.totals.synthesize = stage_tokens_from_json(totals["synthesize"]);
        }
        if (totals.contains("refine")) {
          transcript.totals.refine = stage_tokens_from_json(totals["refine"]);
        }
        if (totals.contains("total_tokens") &&
            totals["total_tokens"].is_number_unsigned()) {
          transcript.totals.total_tokens = totals["total_tokens"].get<std::size_t>();
        }
        if (totals.contains("estimated_cost") && totals["estimated_cost"].is_number()) {
          transcript.totals.estimated_cost = totals["estimated_cost"].get<double>();
        }
        if (totals.contains("warnings") && totals["warnings"].is_array()) {
          for (const auto& w : totals["warnings"]) {
            if (w.is_string()) transcript.totals.warnings.push_back(w.get<std::string>());
          }
        }
      }
      continue;
    }

    return bad("unknown record type '" + record + "'");
  }

  if (!saw_summary) {
    return ErrorTrace{ErrorCode::missing_key, "transcript has no summary record",
                      std::nullopt, "summary"};
  }
  return transcript;
}

}  // namespace strot
