#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strot/backend.hpp"
#include "strot/dataset.hpp"
#include "strot/dsl.hpp"
#include "strot/executor.hpp"
#include "strot/plan.hpp"
#include "strot/profiler.hpp"

namespace strot {

enum class SessionOutcome { success, model_failure, infrastructure_failure };

const char* session_outcome_name(SessionOutcome outcome);

// One backend call and what became of it. Model-content failures (parse
// errors, plan mismatches, execution traces) land in `error`; a clean
// execution lands in `payload`.
struct Attempt {
  Stage stage = Stage::plan;
  int t = 0;  // position in the session's attempt list
  std::string prompt_text;
  Completion completion;
  std::optional<AnalysisPlan> plan;
  std::optional<TransformProgram> program;
  std::optional<ErrorTrace> error;
  std::optional<ResultPayload> payload;
};

struct StageTokens {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct TokenLedger {
  StageTokens plan;
  StageTokens synthesize;
  StageTokens refine;
  std::size_t total_tokens = 0;
  std::optional<double> estimated_cost;  // USD; absent when pricing is unknown
  std::vector<std::string> warnings;
};

struct PricingEntry {
  double input_per_1k = 0.0;
  double output_per_1k = 0.0;
};

using PricingTable = std::map<std::string, PricingEntry>;

// Shipped rates, as of Feb 2025. Self-hosted models have no per-token price
// and are deliberately absent: costing them reports "unknown pricing".
const PricingTable& default_pricing();

struct SessionTranscript {
  std::string query;
  std::string dataset_name;
  std::optional<std::string> dataset_path;  // set by callers that know it
  std::string backend_tag;
  std::string context_digest;
  std::vector<Attempt> attempts;
  SessionOutcome outcome = SessionOutcome::model_failure;
  std::optional<ResultPayload> result;   // success
  std::optional<ErrorTrace> failure;     // last model-content ε or infra trace
  std::optional<AnalysisPlan> final_plan;
  int refines_used = 0;
  TokenLedger totals;
};

struct SessionOptions {
  int max_refines = 3;  // T
  DecodingPolicy policy;
  ProfilerConfig profiler;
  PricingTable pricing = default_pricing();
  std::string price_model;  // model id used for costing; empty = backend tag
  bool one_shot = false;    // single flat prompt, no plan, no refinement
};

// The full session loop: context, plan, synthesize, execute, refine while the
// budget lasts. Model-content failures consume the refine budget; transport,
// auth, and fixture-exhaustion problems abort the session as infrastructure
// failures without consuming anything. A failed plan parse re-enters planning
// exactly once (free); a second plan failure ends the session, since there is
// no program to refine.
SessionTranscript run_query(const UserQuery& query, const Dataset& dataset,
                            CompletionBackend& backend,
                            const SessionOptions& options = {});

// Synthesis prompt: schema restricted to the plan's declared fields, the plan
// itself, the transformation-language reference, and the output constraint.
Prompt render_synthesis_prompt(const AnalysisPlan& plan, const SchemaContext& context,
                               const DecodingPolicy& policy = {},
                               const ProfilerConfig& profiler_config = {});

// Refinement prompt: the failing program verbatim, the rendered error, the
// plan restated, the language reference, and the constraint. The error text
// must be nonempty; an empty one is refused here rather than producing a
// prompt that asks the model to fix nothing.
Result<Prompt> render_refine_prompt(const std::string& prior_program_text,
                                    const std::string& error_text,
                                    const AnalysisPlan& plan,
                                    const SchemaContext& context,
                                    const DecodingPolicy& policy = {});

// Baseline prompt: bare column names and the goal, straight to a program.
Prompt render_one_shot_prompt(const SchemaContext& context, const UserQuery& query,
                              const DecodingPolicy& policy = {});

// Per-stage token sums and the cost estimate for the given model id.
TokenLedger account_tokens(const std::vector<Attempt>& attempts,
                           const PricingTable& pricing, const std::string& model_id);

// Canonical line-delimited serialization, version 1: one attempt record per
// line plus a trailing summary record. Latency never appears, so identical
// sessions serialize to identical bytes. docs/transcript-v1.md describes the
// fields.
std::string transcript_to_jsonl(const SessionTranscript& transcript);
Result<SessionTranscript> transcript_from_jsonl(std::string_view text);

}  // namespace strot
