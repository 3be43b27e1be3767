#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strot/error.hpp"
#include "strot/plan.hpp"
#include "strot/profiler.hpp"
#include "strot/util.hpp"

namespace strot {

// Closed transformation language the model emits instead of code. Wire format
// is a single JSON object {"pipeline": [...], "output": {...}}; the full v1
// grammar lives in docs/dsl-v1.md and is embedded verbatim in synthesis
// prompts via dsl_schema_text().

enum class CmpOp { eq, ne, lt, le, gt, ge };

const char* cmp_op_name(CmpOp op);  // "==", "!=", "<", "<=", ">", ">="

// Comparison literal: a number or a string, matching the JSON value.
struct Literal {
  bool is_number = false;
  double number = 0.0;
  std::string text;
};

struct Comparison {
  std::string column;
  CmpOp op = CmpOp::eq;
  Literal value;
};

// Recursive predicate tree. conj/disj hold >= 1 children; negation holds
// exactly one.
struct Predicate {
  enum class Kind { cmp, conj, disj, negation };
  Kind kind = Kind::cmp;
  Comparison cmp;
  std::vector<Predicate> children;
};

// Arithmetic over numeric columns. binary holds exactly two children.
struct Expr {
  enum class Kind { column, literal, binary };
  Kind kind = Kind::literal;
  std::string column;
  double literal = 0.0;
  char op = '+';  // '+', '-', '*', '/'
  std::vector<Expr> children;
};

enum class Agg { sum, mean, min, max, count };

const char* agg_name(Agg agg);

struct AggSpec {
  std::string column;
  Agg agg = Agg::sum;
  std::string alias;
};

struct Step {
  enum class Kind { select, filter, derive, group_by, sort, limit };
  Kind kind = Kind::select;

  std::vector<std::string> columns;  // select
  Predicate predicate;               // filter
  std::string name;                  // derive target
  Expr expr;                         // derive
  std::vector<std::string> keys;     // group_by
  std::vector<AggSpec> aggregations; // group_by
  std::string sort_key;              // sort
  bool descending = false;           // sort
  std::optional<std::string> tiebreak;  // sort, always ascending
  std::int64_t count = 0;            // limit
};

const char* step_kind_name(Step::Kind kind);

struct SeriesSpec {
  std::string label;
  std::string column;
};

struct OutputSpec {
  enum class Shape { chart_series, table };
  Shape shape = Shape::table;
  std::string label_column;        // chart_series only
  std::vector<SeriesSpec> series;  // chart_series only
};

struct TransformProgram {
  std::vector<Step> pipeline;
  OutputSpec output;
};

// The v1 grammar text shipped to the model. Frozen; docs/dsl-v1.md mirrors it.
const std::string& dsl_schema_text();

ojson program_to_json(const TransformProgram& program);

// Parses and fully validates: first balanced object extraction, step shapes,
// the step-order grammar select? filter* derive* group_by? sort? limit?,
// column resolution against the schema as it evolves through the pipeline,
// and aggregation/expression typing. A program that passes here cannot hit
// column-resolution or typing faults at execution time.
Result<TransformProgram> parse_program(std::string_view raw,
                                       const SchemaContext& context);

// Structural parse of an already-extracted program object: step shapes and
// step order only, no column resolution. Loading stored transcripts uses
// this directly.
Result<TransformProgram> program_from_json(const ojson& object);

// Cross-checks program against plan: every column the program touches must
// come from plan.fields_used or be an alias the program itself introduces,
// and the step shapes must be consistent with the declared transformation
// type. Returns nullopt when consistent, a PlanMismatch trace otherwise.
std::optional<ErrorTrace> validate_against_plan(const TransformProgram& program,
                                                const AnalysisPlan& plan);

}  // namespace strot
