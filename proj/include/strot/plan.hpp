#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "strot/error.hpp"
#include "strot/profiler.hpp"
#include "strot/prompt.hpp"
#include "strot/util.hpp"

namespace strot {

// Closed vocabulary for the plan's declared intent. Free-text spellings from
// the model ("aggregate", "top-k", "sort by") are folded onto these via the
// synonym table in parse_transformation_type; see docs/plan-schema.md.
enum class TransformationType { summary, filter, group, rank, trend, correlate };

const char* transformation_type_name(TransformationType type);

// Normalizes (lowercase, spaces and hyphens to underscores) and resolves
// through the built-in synonym table; extra_synonyms lets a deployment widen
// the table without a rebuild. Unrecognized spellings return nullopt.
std::optional<TransformationType> parse_transformation_type(
    std::string_view text,
    const std::unordered_map<std::string, std::string>& extra_synonyms = {});

struct UserQuery {
  std::string text;
};

// The only gate on queries: nonempty after trimming.
Result<UserQuery> make_query(std::string_view text);

struct AnalysisPlan {
  std::vector<std::string> steps;
  std::vector<std::string> fields_used;
  TransformationType transformation_type = TransformationType::summary;
  std::string description;

  bool operator==(const AnalysisPlan&) const = default;
};

ojson plan_to_json(const AnalysisPlan& plan);

// Plan-stage prompt: schema metadata, "User Goal:" instruction, then the
// output-format constraint naming the four required keys.
Prompt render_plan_prompt(const SchemaContext& context, const UserQuery& query,
                          const DecodingPolicy& policy = {},
                          const ProfilerConfig& profiler_config = {});

// Parses a model completion into a plan. Tolerates prose around the object
// (first balanced object wins) and unknown extra keys (reported through
// `warnings`, never fatal). Rejections carry traces the refinement loop can
// render: MalformedObject, MissingKey, UnknownField (with nearest-name
// suggestions), UnknownTransformationType.
Result<AnalysisPlan> parse_plan(
    std::string_view raw, const SchemaContext& context,
    std::vector<std::string>* warnings = nullptr,
    const std::unordered_map<std::string, std::string>& extra_synonyms = {});

// Structural parse of an already-extracted plan object. Checks keys, shapes,
// and the transformation-type vocabulary, but not schema membership; loading
// stored transcripts uses this directly.
Result<AnalysisPlan> plan_from_json(
    const ojson& object, std::vector<std::string>* warnings = nullptr,
    const std::unordered_map<std::string, std::string>& extra_synonyms = {});

std::size_t plan_step_count(const AnalysisPlan& plan);

}  // namespace strot
