#include "strot/plan.hpp"

#include <algorithm>

namespace strot {
namespace {

// Spelling -> canonical name. Keys are pre-normalized (lowercase,
// underscores). Mirrored in docs/plan-schema.md; keep the two in sync.
const std::unordered_map<std::string, std::string>& builtin_synonyms() {
  static const std::unordered_map<std::string, std::string> table = {
      {"summary", "summary"},       {"summarize", "summary"},
      {"summarise", "summary"},     {"describe", "summary"},
      {"overview", "summary"},      {"statistics", "summary"},
      {"stats", "summary"},

      {"filter", "filter"},         {"filtering", "filter"},
      {"where", "filter"},          {"subset", "filter"},
      {"restrict", "filter"},       {"slice", "filter"},

      {"group", "group"},           {"grouped", "group"},
      {"group_by", "group"},        {"groupby", "group"},
      {"aggregate", "group"},       {"aggregation", "group"},
      {"aggregate_by", "group"},    {"bucket", "group"},

      {"rank", "rank"},             {"ranking", "rank"},
      {"top", "rank"},              {"top_k", "rank"},
      {"topk", "rank"},             {"top_n", "rank"},
      {"topn", "rank"},             {"sort", "rank"},
      {"sort_by", "rank"},          {"order", "rank"},
      {"order_by", "rank"},

      {"trend", "trend"},           {"trends", "trend"},
      {"time_series", "trend"},     {"timeseries", "trend"},
      {"over_time", "trend"},       {"temporal", "trend"},

      {"correlate", "correlate"},   {"correlation", "correlate"},
      {"corr", "correlate"},        {"relationship", "correlate"},
      {"association", "correlate"}, {"compare", "correlate"},
  };
  return table;
}

std::string normalize_type_text(std::string_view text) {
  std::string t = to_lower(trim(text));
  std::string out;
  out.reserve(t.size());
  for (char c : t) {
    if (c == ' ' || c == '-' || c == '_') {
      if (!out.empty() && out.back() != '_') out.push_back('_');
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::optional<TransformationType> canonical_to_type(const std::string& name) {
  if (name == "summary") return TransformationType::summary;
  if (name == "filter") return TransformationType::filter;
  if (name == "group") return TransformationType::group;
  if (name == "rank") return TransformationType::rank;
  if (name == "trend") return TransformationType::trend;
  if (name == "correlate") return TransformationType::correlate;
  return std::nullopt;
}

ErrorTrace malformed_plan(const char* message, const char* key) {
  ErrorTrace t{ErrorCode::malformed_object, message};
  t.offending_symbol = key;
  return t;
}

}  // namespace

const char* transformation_type_name(TransformationType type) {
  switch (type) {
    case TransformationType::summary: return "summary";
    case TransformationType::filter: return "filter";
    case TransformationType::group: return "group";
    case TransformationType::rank: return "rank";
    case TransformationType::trend: return "trend";
    case TransformationType::correlate: return "correlate";
  }
  return "summary";
}

std::optional<TransformationType> parse_transformation_type(
    std::string_view text,
    const std::unordered_map<std::string, std::string>& extra_synonyms) {
  std::string key = normalize_type_text(text);
  if (auto it = extra_synonyms.find(key); it != extra_synonyms.end())
    return canonical_to_type(it->second);
  const auto& table = builtin_synonyms();
  if (auto it = table.find(key); it != table.end())
    return canonical_to_type(it->second);
  return std::nullopt;
}

Result<UserQuery> make_query(std::string_view text) {
  std::string trimmed = trim(text);
  if (trimmed.empty())
    return ErrorTrace{ErrorCode::invalid_query, "query is empty"};
  return UserQuery{std::move(trimmed)};
}

ojson plan_to_json(const AnalysisPlan& plan) {
  ojson j;
  j["steps"] = plan.steps;
  j["fields_used"] = plan.fields_used;
  j["transformation_type"] = transformation_type_name(plan.transformation_type);
  j["description"] = plan.description;
  return j;
}

Prompt render_plan_prompt(const SchemaContext& context, const UserQuery& query,
                          const DecodingPolicy& policy,
                          const ProfilerConfig& profiler_config) {
  Prompt prompt;
  prompt.stage = Stage::plan;
  prompt.temperature = policy.temperature_for(Stage::plan);
  prompt.max_tokens = policy.max_tokens_for(Stage::plan);
  prompt.sections.push_back(
      {"Schema Metadata", render_context(context, profiler_config)});
  prompt.sections.push_back({"User Instruction", "User Goal: " + query.text});
  prompt.sections.push_back(
      {"Output Format Constraint",
       "Return only a valid JSON object, no prose and no code fences. The object "
       "must contain exactly these keys: \"steps\" (array of text, the ordered "
       "analysis steps), \"fields_used\" (array of column names copied exactly "
       "from the schema above), \"transformation_type\" (one of: summary, filter, "
       "group, rank, trend, correlate), \"description\" (one sentence)."});
  return prompt;
}

Result<AnalysisPlan> parse_plan(
    std::string_view raw, const SchemaContext& context,
    std::vector<std::string>* warnings,
    const std::unordered_map<std::string, std::string>& extra_synonyms) {
  auto object = extract_first_object(raw);
  if (!object)
    return ErrorTrace{ErrorCode::malformed_object,
                      "no parseable object found in completion"};

  auto plan = plan_from_json(*object, warnings, extra_synonyms);
  if (!plan.ok()) return plan.error();

  std::vector<std::string> known;
  known.reserve(context.columns.size());
  for (const auto& col : context.columns) known.push_back(col.name);
  for (const auto& name : plan.value().fields_used) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      ErrorTrace t{ErrorCode::unknown_field,
                   "plan references a column that is not in the schema"};
      t.offending_symbol = name;
      t.suggestions = nearest_names(name, known);
      return t;
    }
  }
  return plan.take();
}

Result<AnalysisPlan> plan_from_json(
    const ojson& object, std::vector<std::string>* warnings,
    const std::unordered_map<std::string, std::string>& extra_synonyms) {
  static const char* kRequired[] = {"steps", "fields_used", "transformation_type",
                                    "description"};
  for (const char* key : kRequired) {
    if (!object.contains(key)) {
      ErrorTrace t{ErrorCode::missing_key, "required plan key is missing"};
      t.offending_symbol = key;
      return t;
    }
  }

  if (warnings) {
    std::string extras;
    for (auto it = object.begin(); it != object.end(); ++it) {
      if (std::find_if(std::begin(kRequired), std::end(kRequired),
                       [&](const char* k) { return it.key() == k; }) !=
          std::end(kRequired))
        continue;
      if (!extras.empty()) extras += ", ";
      extras += it.key();
    }
    if (!extras.empty()) warnings->push_back("ignored plan keys: " + extras);
  }

  AnalysisPlan plan;

  const auto& steps = object["steps"];
  if (!steps.is_array() || steps.empty())
    return malformed_plan("steps must be a nonempty array of text", "steps");
  for (const auto& step : steps) {
    if (!step.is_string())
      return malformed_plan("steps must be a nonempty array of text", "steps");
    plan.steps.push_back(step.get<std::string>());
  }

  const auto& fields = object["fields_used"];
  if (!fields.is_array() || fields.empty())
    return malformed_plan("fields_used must be a nonempty array of column names",
                          "fields_used");
  for (const auto& field : fields) {
    if (!field.is_string())
      return malformed_plan("fields_used must be a nonempty array of column names",
                            "fields_used");
    plan.fields_used.push_back(field.get<std::string>());
  }

  const auto& type_field = object["transformation_type"];
  if (!type_field.is_string())
    return malformed_plan("transformation_type must be text", "transformation_type");
  std::string type_text = type_field.get<std::string>();
  auto type = parse_transformation_type(type_text, extra_synonyms);
  if (!type) {
    ErrorTrace t{ErrorCode::unknown_transformation_type,
                 "transformation_type is not in the vocabulary"};
    t.offending_symbol = type_text;
    return t;
  }
  plan.transformation_type = *type;

  const auto& description = object["description"];
  if (!description.is_string())
    return malformed_plan("description must be text", "description");
  plan.description = description.get<std::string>();

  return plan;
}

std::size_t plan_step_count(const AnalysisPlan& plan) { return plan.steps.size(); }

}  // namespace strot
