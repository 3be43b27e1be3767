#include "strot/error.hpp"

#include <array>
#include <sstream>

namespace strot {

namespace {

struct CodeEntry {
  ErrorCode code;
  std::string_view name;
};

constexpr std::array<CodeEntry, 26> kRegistry{{
    {ErrorCode::empty_input, "E_EMPTY_INPUT"},
    {ErrorCode::ragged_row, "E_RAGGED_ROW"},
    {ErrorCode::duplicate_column, "E_DUPLICATE_COLUMN"},
    {ErrorCode::malformed_csv, "E_MALFORMED_CSV"},
    {ErrorCode::io_error, "E_IO_ERROR"},
    {ErrorCode::unknown_column, "E_UNKNOWN_COLUMN"},
    {ErrorCode::invalid_query, "E_INVALID_QUERY"},
    {ErrorCode::malformed_object, "E_MALFORMED_OBJECT"},
    {ErrorCode::missing_key, "E_MISSING_KEY"},
    {ErrorCode::unknown_field, "E_UNKNOWN_FIELD"},
    {ErrorCode::unknown_transformation_type, "E_UNKNOWN_TRANSFORMATION_TYPE"},
    {ErrorCode::grammar_violation, "E_GRAMMAR_VIOLATION"},
    {ErrorCode::type_mismatch, "E_TYPE_MISMATCH"},
    {ErrorCode::plan_mismatch, "E_PLAN_MISMATCH"},
    {ErrorCode::division_by_zero, "E_DIVISION_BY_ZERO"},
    {ErrorCode::empty_result, "E_EMPTY_RESULT"},
    {ErrorCode::empty_aggregate, "E_EMPTY_AGGREGATE"},
    {ErrorCode::output_shape_mismatch, "E_OUTPUT_SHAPE_MISMATCH"},
    {ErrorCode::insufficient_data, "E_INSUFFICIENT_DATA"},
    {ErrorCode::zero_variance, "E_ZERO_VARIANCE"},
    {ErrorCode::transport, "E_TRANSPORT"},
    {ErrorCode::timeout, "E_TIMEOUT"},
    {ErrorCode::auth_failure, "E_AUTH_FAILURE"},
    {ErrorCode::empty_completion, "E_EMPTY_COMPLETION"},
    {ErrorCode::script_exhausted, "E_SCRIPT_EXHAUSTED"},
    {ErrorCode::unknown_model_pricing, "E_UNKNOWN_MODEL_PRICING"},
}};

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  for (const auto& e : kRegistry) {
    if (e.code == code) return e.name;
  }
  return "E_TRANSPORT";
}

std::optional<ErrorCode> error_code_from_name(std::string_view name) {
  for (const auto& e : kRegistry) {
    if (e.name == name) return e.code;
  }
  return std::nullopt;
}

const std::vector<std::string>& error_code_registry() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kRegistry.size());
    for (const auto& e : kRegistry) out.emplace_back(e.name);
    return out;
  }();
  return names;
}

std::string render_error(const ErrorTrace& trace) {
  std::ostringstream out;
  out << "error[" << error_code_name(trace.code) << "] " << trace.message << "\n";
  if (trace.step_index.has_value()) {
    out << "  step: " << *trace.step_index << "\n";
  }
  if (trace.offending_symbol.has_value()) {
    out << "  symbol: " << *trace.offending_symbol << "\n";
  }
  if (!trace.suggestions.empty()) {
    out << "  did you mean: ";
    for (std::size_t i = 0; i < trace.suggestions.size(); ++i) {
      if (i > 0) out << ", ";
      out << trace.suggestions[i];
    }
    out << "\n";
  }
  return out.str();
}

ojson error_to_json(const ErrorTrace& trace) {
  ojson j;
  j["code"] = std::string(error_code_name(trace.code));
  j["message"] = trace.message;
  j["step_index"] = trace.step_index.has_value() ? ojson(*trace.step_index) : ojson(nullptr);
  j["offending_symbol"] =
      trace.offending_symbol.has_value() ? ojson(*trace.offending_symbol) : ojson(nullptr);
  j["suggestions"] = trace.suggestions;
  return j;
}

ErrorTrace error_from_json(const ojson& j) {
  ErrorTrace t;
  if (auto code = error_code_from_name(j.value("code", ""))) t.code = *code;
  t.message = j.value("message", "");
  if (j.contains("step_index") && !j["step_index"].is_null()) {
    t.step_index = j["step_index"].get<int>();
  }
  if (j.contains("offending_symbol") && !j["offending_symbol"].is_null()) {
    t.offending_symbol = j["offending_symbol"].get<std::string>();
  }
  if (j.contains("suggestions")) {
    t.suggestions = j["suggestions"].get<std::vector<std::string>>();
  }
  return t;
}

}  // namespace strot
