#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "strot/util.hpp"

namespace strot {

// Stable failure codes. The string forms (E_*) are a published registry:
// they appear verbatim in rendered error blocks, refine prompts, and
// transcripts, so renaming one is a breaking change.
enum class ErrorCode {
  // ingestion
  empty_input,
  ragged_row,
  duplicate_column,
  malformed_csv,
  io_error,
  // lookup / query
  unknown_column,
  invalid_query,
  // plan parsing
  malformed_object,
  missing_key,
  unknown_field,
  unknown_transformation_type,
  // program parsing / validation
  grammar_violation,
  type_mismatch,
  plan_mismatch,
  // execution
  division_by_zero,
  empty_result,
  empty_aggregate,
  output_shape_mismatch,
  // correlation
  insufficient_data,
  zero_variance,
  // backend
  transport,
  timeout,
  auth_failure,
  empty_completion,
  script_exhausted,
  // accounting
  unknown_model_pricing,
};

std::string_view error_code_name(ErrorCode code);
std::optional<ErrorCode> error_code_from_name(std::string_view name);
const std::vector<std::string>& error_code_registry();

// The structured failure payload fed back into refinement prompts. Messages
// never embed raw dataset values beyond the offending symbol.
struct ErrorTrace {
  ErrorCode code = ErrorCode::transport;
  std::string message;
  std::optional<int> step_index;  // 0-based position in the program pipeline
  std::optional<std::string> offending_symbol;
  std::vector<std::string> suggestions;
};

// Byte-deterministic single-screen rendering of a trace.
std::string render_error(const ErrorTrace& trace);

ojson error_to_json(const ErrorTrace& trace);
ErrorTrace error_from_json(const ojson& j);

template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(ErrorTrace trace) : v_(std::move(trace)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(v_); }
  T& value() & { return std::get<T>(v_); }
  T&& take() && { return std::get<T>(std::move(v_)); }
  T take() & { return std::get<T>(std::move(v_)); }

  const ErrorTrace& error() const { return std::get<ErrorTrace>(v_); }

 private:
  std::variant<T, ErrorTrace> v_;
};

}  // namespace strot
