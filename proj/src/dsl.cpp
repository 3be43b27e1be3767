#include "strot/dsl.hpp"

#include <algorithm>
#include <unordered_set>

namespace strot {
namespace {

ErrorTrace grammar_error(std::string message, std::optional<int> step_index = {}) {
  ErrorTrace t{ErrorCode::grammar_violation, std::move(message)};
  t.step_index = step_index;
  return t;
}

ErrorTrace unknown_column(const std::string& name,
                          const std::vector<std::string>& candidates,
                          std::optional<int> step_index = {}) {
  ErrorTrace t{ErrorCode::unknown_column, "column is not available at this step"};
  t.offending_symbol = name;
  t.suggestions = nearest_names(name, candidates);
  t.step_index = step_index;
  return t;
}

ErrorTrace type_mismatch(const std::string& column, const char* expected,
                         const char* found, std::optional<int> step_index = {}) {
  ErrorTrace t{ErrorCode::type_mismatch,
               std::string("expected ") + expected + " column, found " + found};
  t.offending_symbol = column;
  t.step_index = step_index;
  return t;
}

struct OpName {
  CmpOp op;
  const char* name;
};
constexpr OpName kCmpOps[] = {{CmpOp::eq, "=="}, {CmpOp::ne, "!="}, {CmpOp::lt, "<"},
                              {CmpOp::le, "<="}, {CmpOp::gt, ">"},  {CmpOp::ge, ">="}};

std::optional<CmpOp> cmp_op_from_name(const std::string& name) {
  for (const auto& entry : kCmpOps)
    if (name == entry.name) return entry.op;
  return std::nullopt;
}

std::optional<Agg> agg_from_name(const std::string& name) {
  if (name == "sum") return Agg::sum;
  if (name == "mean") return Agg::mean;
  if (name == "min") return Agg::min;
  if (name == "max") return Agg::max;
  if (name == "count") return Agg::count;
  return std::nullopt;
}

std::optional<char> arith_from_name(const std::string& name) {
  if (name == "add") return '+';
  if (name == "sub") return '-';
  if (name == "mul") return '*';
  if (name == "div") return '/';
  return std::nullopt;
}

const char* arith_name(char op) {
  switch (op) {
    case '+': return "add";
    case '-': return "sub";
    case '*': return "mul";
    case '/': return "div";
  }
  return "add";
}

Result<Predicate> parse_predicate(const ojson& j) {
  if (!j.is_object())
    return grammar_error("predicate must be an object");

  if (j.contains("cmp")) {
    const auto& c = j["cmp"];
    if (!c.is_object() || !c.contains("column") || !c.contains("op") ||
        !c.contains("value") || !c["column"].is_string() || !c["op"].is_string())
      return grammar_error("cmp needs column, op, and value");
    Predicate p;
    p.kind = Predicate::Kind::cmp;
    p.cmp.column = c["column"].get<std::string>();
    auto op = cmp_op_from_name(c["op"].get<std::string>());
    if (!op)
      return grammar_error("cmp op must be one of ==, !=, <, <=, >, >=");
    p.cmp.op = *op;
    const auto& v = c["value"];
    if (v.is_number()) {
      p.cmp.value.is_number = true;
      p.cmp.value.number = v.get<double>();
    } else if (v.is_string()) {
      p.cmp.value.text = v.get<std::string>();
    } else {
      return grammar_error("cmp value must be a number or a string");
    }
    return p;
  }

  auto parse_children = [](const ojson& arr, Predicate& p) -> std::optional<ErrorTrace> {
    if (!arr.is_array() || arr.empty())
      return grammar_error("and/or needs a nonempty predicate array");
    for (const auto& child : arr) {
      auto sub = parse_predicate(child);
      if (!sub.ok()) return sub.error();
      p.children.push_back(sub.take());
    }
    return std::nullopt;
  };

  if (j.contains("and")) {
    Predicate p;
    p.kind = Predicate::Kind::conj;
    if (auto err = parse_children(j["and"], p)) return *err;
    return p;
  }
  if (j.contains("or")) {
    Predicate p;
    p.kind = Predicate::Kind::disj;
    if (auto err = parse_children(j["or"], p)) return *err;
    return p;
  }
  if (j.contains("not")) {
    Predicate p;
    p.kind = Predicate::Kind::negation;
    auto sub = parse_predicate(j["not"]);
    if (!sub.ok()) return sub.error();
    p.children.push_back(sub.take());
    return p;
  }
  return grammar_error("predicate must be one of cmp, and, or, not");
}

Result<Expr> parse_expr(const ojson& j) {
  if (!j.is_object())
    return grammar_error("expression must be an object");
  if (j.contains("col")) {
    if (!j["col"].is_string())
      return grammar_error("col must name a column");
    Expr e;
    e.kind = Expr::Kind::column;
    e.column = j["col"].get<std::string>();
    return e;
  }
  if (j.contains("lit")) {
    if (!j["lit"].is_number())
      return grammar_error("lit must be a number");
    Expr e;
    e.kind = Expr::Kind::literal;
    e.literal = j["lit"].get<double>();
    return e;
  }
  if (j.contains("op")) {
    if (!j["op"].is_string() || !j.contains("left") || !j.contains("right"))
      return grammar_error("arithmetic needs op, left, and right");
    auto op = arith_from_name(j["op"].get<std::string>());
    if (!op)
      return grammar_error("arithmetic op must be one of add, sub, mul, div");
    Expr e;
    e.kind = Expr::Kind::binary;
    e.op = *op;
    auto left = parse_expr(j["left"]);
    if (!left.ok()) return left.error();
    auto right = parse_expr(j["right"]);
    if (!right.ok()) return right.error();
    e.children.push_back(left.take());
    e.children.push_back(right.take());
    return e;
  }
  return grammar_error("expression must be col, lit, or an arithmetic op");
}

Result<Step> parse_step(const ojson& j) {
  if (!j.is_object() || !j.contains("op") || !j["op"].is_string())
    return grammar_error("each step must be an object with an op");
  std::string op = j["op"].get<std::string>();
  Step step;

  if (op == "select") {
    step.kind = Step::Kind::select;
    if (!j.contains("columns") || !j["columns"].is_array() || j["columns"].empty())
      return grammar_error("select needs a nonempty columns array");
    for (const auto& c : j["columns"]) {
      if (!c.is_string())
        return grammar_error("select columns must be names");
      step.columns.push_back(c.get<std::string>());
    }
    return step;
  }
  if (op == "filter") {
    step.kind = Step::Kind::filter;
    if (!j.contains("predicate"))
      return grammar_error("filter needs a predicate");
    auto pred = parse_predicate(j["predicate"]);
    if (!pred.ok()) return pred.error();
    step.predicate = pred.take();
    return step;
  }
  if (op == "derive") {
    step.kind = Step::Kind::derive;
    if (!j.contains("name") || !j["name"].is_string() ||
        j["name"].get<std::string>().empty())
      return grammar_error("derive needs a nonempty name");
    if (!j.contains("expr"))
      return grammar_error("derive needs an expr");
    step.name = j["name"].get<std::string>();
    auto expr = parse_expr(j["expr"]);
    if (!expr.ok()) return expr.error();
    step.expr = expr.take();
    return step;
  }
  if (op == "group_by") {
    step.kind = Step::Kind::group_by;
    if (!j.contains("keys") || !j["keys"].is_array() || j["keys"].empty())
      return grammar_error("group_by needs a nonempty keys array");
    for (const auto& k : j["keys"]) {
      if (!k.is_string())
        return grammar_error("group_by keys must be names");
      step.keys.push_back(k.get<std::string>());
    }
    if (!j.contains("aggregations") || !j["aggregations"].is_array() ||
        j["aggregations"].empty())
      return grammar_error("group_by needs a nonempty aggregations array");
    for (const auto& a : j["aggregations"]) {
      if (!a.is_object() || !a.contains("column") || !a.contains("agg") ||
          !a.contains("alias") || !a["column"].is_string() ||
          !a["agg"].is_string() || !a["alias"].is_string() ||
          a["alias"].get<std::string>().empty())
        return grammar_error("each aggregation needs column, agg, and a nonempty alias");
      AggSpec spec;
      spec.column = a["column"].get<std::string>();
      auto agg = agg_from_name(a["agg"].get<std::string>());
      if (!agg)
        return grammar_error("agg must be one of sum, mean, min, max, count");
      spec.agg = *agg;
      spec.alias = a["alias"].get<std::string>();
      step.aggregations.push_back(std::move(spec));
    }
    return step;
  }
  if (op == "sort") {
    step.kind = Step::Kind::sort;
    if (!j.contains("key") || !j["key"].is_string())
      return grammar_error("sort needs a key");
    step.sort_key = j["key"].get<std::string>();
    if (j.contains("direction")) {
      if (!j["direction"].is_string())
        return grammar_error("sort direction must be asc or desc");
      std::string dir = j["direction"].get<std::string>();
      if (dir == "desc") step.descending = true;
      else if (dir != "asc")
        return grammar_error("sort direction must be asc or desc");
    }
    if (j.contains("tiebreak")) {
      if (!j["tiebreak"].is_string())
        return grammar_error("sort tiebreak must be a column name");
      step.tiebreak = j["tiebreak"].get<std::string>();
    }
    return step;
  }
  if (op == "limit") {
    step.kind = Step::Kind::limit;
    if (!j.contains("count") || !j["count"].is_number_integer() ||
        j["count"].get<std::int64_t>() < 1)
      return grammar_error("limit count must be a positive integer");
    step.count = j["count"].get<std::int64_t>();
    return step;
  }
  return grammar_error("unknown step op '" + op + "'");
}

// Step-order grammar: select? filter* derive* group_by? sort? limit?
std::optional<ErrorTrace> check_order(const std::vector<Step>& pipeline) {
  auto rank = [](Step::Kind kind) {
    switch (kind) {
      case Step::Kind::select: return 0;
      case Step::Kind::filter: return 1;
      case Step::Kind::derive: return 2;
      case Step::Kind::group_by: return 3;
      case Step::Kind::sort: return 4;
      case Step::Kind::limit: return 5;
    }
    return 0;
  };
  auto repeatable = [](Step::Kind kind) {
    return kind == Step::Kind::filter || kind == Step::Kind::derive;
  };

  int last_rank = -1;
  Step::Kind last_kind = Step::Kind::select;
  for (std::size_t i = 0; i < pipeline.size(); ++i) {
    Step::Kind kind = pipeline[i].kind;
    int r = rank(kind);
    if (r < last_rank)
      return grammar_error(std::string(step_kind_name(kind)) + " cannot follow " +
                               step_kind_name(last_kind),
                           static_cast<int>(i));
    if (r == last_rank && !repeatable(kind))
      return grammar_error(std::string("duplicate ") + step_kind_name(kind) + " step",
                           static_cast<int>(i));
    last_rank = r;
    last_kind = kind;
  }
  return std::nullopt;
}

// Schema as it evolves through the pipeline.
struct ColInfo {
  std::string name;
  SemanticType type;
};

const ColInfo* find_col(const std::vector<ColInfo>& schema, const std::string& name) {
  for (const auto& col : schema)
    if (col.name == name) return &col;
  return nullptr;
}

std::vector<std::string> names_of(const std::vector<ColInfo>& schema) {
  std::vector<std::string> names;
  names.reserve(schema.size());
  for (const auto& col : schema) names.push_back(col.name);
  return names;
}

std::optional<ErrorTrace> resolve_predicate(const Predicate& p,
                                            const std::vector<ColInfo>& schema,
                                            int step_index) {
  switch (p.kind) {
    case Predicate::Kind::cmp:
      if (!find_col(schema, p.cmp.column))
        return unknown_column(p.cmp.column, names_of(schema), step_index);
      return std::nullopt;
    case Predicate::Kind::conj:
    case Predicate::Kind::disj:
    case Predicate::Kind::negation:
      for (const auto& child : p.children)
        if (auto err = resolve_predicate(child, schema, step_index)) return err;
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<ErrorTrace> resolve_expr(const Expr& e,
                                       const std::vector<ColInfo>& schema,
                                       int step_index) {
  switch (e.kind) {
    case Expr::Kind::column: {
      const ColInfo* col = find_col(schema, e.column);
      if (!col) return unknown_column(e.column, names_of(schema), step_index);
      if (col->type != SemanticType::numerical)
        return type_mismatch(e.column, "numerical", semantic_type_name(col->type),
                             step_index);
      return std::nullopt;
    }
    case Expr::Kind::literal:
      return std::nullopt;
    case Expr::Kind::binary:
      for (const auto& child : e.children)
        if (auto err = resolve_expr(child, schema, step_index)) return err;
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<ErrorTrace> resolve_program(const TransformProgram& program,
                                          const SchemaContext& context) {
  std::vector<ColInfo> schema;
  schema.reserve(context.columns.size());
  for (const auto& col : context.columns)
    schema.push_back(ColInfo{col.name, col.type});

  for (std::size_t i = 0; i < program.pipeline.size(); ++i) {
    const Step& step = program.pipeline[i];
    int idx = static_cast<int>(i);
    switch (step.kind) {
      case Step::Kind::select: {
        std::vector<ColInfo> next;
        std::unordered_set<std::string> seen;
        for (const auto& name : step.columns) {
          const ColInfo* col = find_col(schema, name);
          if (!col) return unknown_column(name, names_of(schema), idx);
          if (!seen.insert(name).second)
            return grammar_error("duplicate column '" + name + "' in select", idx);
          next.push_back(*col);
        }
        schema = std::move(next);
        break;
      }
      case Step::Kind::filter:
        if (auto err = resolve_predicate(step.predicate, schema, idx)) return err;
        break;
      case Step::Kind::derive:
        if (find_col(schema, step.name))
          return grammar_error("derive name '" + step.name + "' already exists", idx);
        if (auto err = resolve_expr(step.expr, schema, idx)) return err;
        schema.push_back(ColInfo{step.name, SemanticType::numerical});
        break;
      case Step::Kind::group_by: {
        std::vector<ColInfo> next;
        std::unordered_set<std::string> taken;
        for (const auto& key : step.keys) {
          const ColInfo* col = find_col(schema, key);
          if (!col) return unknown_column(key, names_of(schema), idx);
          if (!taken.insert(key).second)
            return grammar_error("duplicate group_by key '" + key + "'", idx);
          next.push_back(*col);
        }
        for (const auto& agg : step.aggregations) {
          const ColInfo* col = find_col(schema, agg.column);
          if (!col) return unknown_column(agg.column, names_of(schema), idx);
          if (agg.agg != Agg::count && col->type != SemanticType::numerical)
            return type_mismatch(agg.column, "numerical",
                                 semantic_type_name(col->type), idx);
          if (!taken.insert(agg.alias).second)
            return grammar_error("alias '" + agg.alias + "' collides", idx);
          next.push_back(ColInfo{agg.alias, SemanticType::numerical});
        }
        schema = std::move(next);
        break;
      }
      case Step::Kind::sort:
        if (!find_col(schema, step.sort_key))
          return unknown_column(step.sort_key, names_of(schema), idx);
        if (step.tiebreak && !find_col(schema, *step.tiebreak))
          return unknown_column(*step.tiebreak, names_of(schema), idx);
        break;
      case Step::Kind::limit:
        break;
    }
  }

  if (program.output.shape == OutputSpec::Shape::chart_series) {
    if (!find_col(schema, program.output.label_column))
      return unknown_column(program.output.label_column, names_of(schema));
    for (const auto& series : program.output.series) {
      const ColInfo* col = find_col(schema, series.column);
      if (!col) return unknown_column(series.column, names_of(schema));
      if (col->type != SemanticType::numerical)
        return type_mismatch(series.column, "numerical",
                             semantic_type_name(col->type));
    }
  }
  return std::nullopt;
}

ojson predicate_to_json(const Predicate& p) {
  ojson j;
  switch (p.kind) {
    case Predicate::Kind::cmp: {
      ojson c;
      c["column"] = p.cmp.column;
      c["op"] = cmp_op_name(p.cmp.op);
      if (p.cmp.value.is_number)
        c["value"] = p.cmp.value.number;
      else
        c["value"] = p.cmp.value.text;
      j["cmp"] = std::move(c);
      break;
    }
    case Predicate::Kind::conj:
    case Predicate::Kind::disj: {
      ojson arr = ojson::array();
      for (const auto& child : p.children) arr.push_back(predicate_to_json(child));
      j[p.kind == Predicate::Kind::conj ? "and" : "or"] = std::move(arr);
      break;
    }
    case Predicate::Kind::negation:
      j["not"] = predicate_to_json(p.children.front());
      break;
  }
  return j;
}

ojson expr_to_json(const Expr& e) {
  ojson j;
  switch (e.kind) {
    case Expr::Kind::column: j["col"] = e.column; break;
    case Expr::Kind::literal: j["lit"] = e.literal; break;
    case Expr::Kind::binary:
      j["op"] = arith_name(e.op);
      j["left"] = expr_to_json(e.children[0]);
      j["right"] = expr_to_json(e.children[1]);
      break;
  }
  return j;
}

}  // namespace

const char* cmp_op_name(CmpOp op) {
  for (const auto& entry : kCmpOps)
    if (entry.op == op) return entry.name;
  return "==";
}

const char* agg_name(Agg agg) {
  switch (agg) {
    case Agg::sum: return "sum";
    case Agg::mean: return "mean";
    case Agg::min: return "min";
    case Agg::max: return "max";
    case Agg::count: return "count";
  }
  return "sum";
}

const char* step_kind_name(Step::Kind kind) {
  switch (kind) {
    case Step::Kind::select: return "select";
    case Step::Kind::filter: return "filter";
    case Step::Kind::derive: return "derive";
    case Step::Kind::group_by: return "group_by";
    case Step::Kind::sort: return "sort";
    case Step::Kind::limit: return "limit";
  }
  return "select";
}

const std::string& dsl_schema_text() {
  static const std::string text = R"(DSL v1. Emit exactly one JSON object: {"pipeline": [steps...], "output": output-spec}.
Steps must appear in this order: select? filter* derive* group_by? sort? limit?
- {"op":"select","columns":[names...]}  keep only these columns
- {"op":"filter","predicate":P}  keep rows where P holds
  P is {"cmp":{"column":name,"op":"=="|"!="|"<"|"<="|">"|">=","value":number-or-string}}
  or {"and":[P...]} or {"or":[P...]} or {"not":P}
- {"op":"derive","name":new-name,"expr":E}  add a numeric column
  E is {"col":name} or {"lit":number} or {"op":"add"|"sub"|"mul"|"div","left":E,"right":E}
- {"op":"group_by","keys":[names...],"aggregations":[{"column":name,"agg":"sum"|"mean"|"min"|"max"|"count","alias":new-name}...]}
  columns afterwards are exactly keys plus aliases; agg sources must be numeric except count
- {"op":"sort","key":name,"direction":"asc"|"desc","tiebreak":name}  tiebreak is optional, ascending
- {"op":"limit","count":positive-integer}
output-spec is {"shape":"chart_series","label_column":name,"series":[{"label":text,"column":numeric-name}...]}
or {"shape":"table"}.
Copy column names exactly as the schema spells them. No operations outside this list exist.)";
  return text;
}

ojson program_to_json(const TransformProgram& program) {
  ojson j;
  ojson pipeline = ojson::array();
  for (const auto& step : program.pipeline) {
    ojson s;
    s["op"] = step_kind_name(step.kind);
    switch (step.kind) {
      case Step::Kind::select:
        s["columns"] = step.columns;
        break;
      case Step::Kind::filter:
        s["predicate"] = predicate_to_json(step.predicate);
        break;
      case Step::Kind::derive:
        s["name"] = step.name;
        s["expr"] = expr_to_json(step.expr);
        break;
      case Step::Kind::group_by: {
        s["keys"] = step.keys;
        ojson aggs = ojson::array();
        for (const auto& agg : step.aggregations) {
          ojson a;
          a["column"] = agg.column;
          a["agg"] = agg_name(agg.agg);
          a["alias"] = agg.alias;
          aggs.push_back(std::move(a));
        }
        s["aggregations"] = std::move(aggs);
        break;
      }
      case Step::Kind::sort:
        s["key"] = step.sort_key;
        s["direction"] = step.descending ? "desc" : "asc";
        if (step.tiebreak) s["tiebreak"] = *step.tiebreak;
        break;
      case Step::Kind::limit:
        s["count"] = step.count;
        break;
    }
    pipeline.push_back(std::move(s));
  }
  j["pipeline"] = std::move(pipeline);

  ojson out;
  if (program.output.shape == OutputSpec::Shape::chart_series) {
    out["shape"] = "chart_series";
    out["label_column"] = program.output.label_column;
    ojson series = ojson::array();
    for (const auto& spec : program.output.series) {
      ojson s;
      s["label"] = spec.label;
      s["column"] = spec.column;
      series.push_back(std::move(s));
    }
    out["series"] = std::move(series);
  } else {
    out["shape"] = "table";
  }
  j["output"] = std::move(out);
  return j;
}

Result<TransformProgram> parse_program(std::string_view raw,
                                       const SchemaContext& context) {
  auto object = extract_first_object(raw);
  if (!object)
    return ErrorTrace{ErrorCode::malformed_object,
                      "no parseable object found in completion"};
  auto program = program_from_json(*object);
  if (!program.ok()) return program.error();
  if (auto err = resolve_program(program.value(), context)) return *err;
  return program.take();
}

Result<TransformProgram> program_from_json(const ojson& object) {
  if (!object.contains("pipeline") || !object.contains("output"))
    return ErrorTrace{ErrorCode::malformed_object,
                      "program needs top-level pipeline and output"};

  const auto& pipeline = object["pipeline"];
  if (!pipeline.is_array() || pipeline.empty())
    return grammar_error("pipeline must be a nonempty array of steps");

  TransformProgram program;
  for (std::size_t i = 0; i < pipeline.size(); ++i) {
    auto step = parse_step(pipeline[i]);
    if (!step.ok()) {
      ErrorTrace t = step.error();
      if (!t.step_index) t.step_index = static_cast<int>(i);
      return t;
    }
    program.pipeline.push_back(step.take());
  }

  const auto& out = object["output"];
  if (!out.is_object() || !out.contains("shape") || !out["shape"].is_string())
    return grammar_error("output needs a shape of chart_series or table");
  std::string shape = out["shape"].get<std::string>();
  if (shape == "chart_series") {
    program.output.shape = OutputSpec::Shape::chart_series;
    if (!out.contains("label_column") || !out["label_column"].is_string())
      return grammar_error("chart_series output needs a label_column");
    program.output.label_column = out["label_column"].get<std::string>();
    if (!out.contains("series") || !out["series"].is_array() || out["series"].empty())
      return grammar_error("chart_series output needs a nonempty series array");
    for (const auto& s : out["series"]) {
      if (!s.is_object() || !s.contains("label") || !s.contains("column") ||
          !s["label"].is_string() || !s["column"].is_string() ||
          s["label"].get<std::string>().empty())
        return grammar_error("each series needs a nonempty label and a column");
      program.output.series.push_back(SeriesSpec{s["label"].get<std::string>(),
                                                 s["column"].get<std::string>()});
    }
  } else if (shape == "table") {
    program.output.shape = OutputSpec::Shape::table;
  } else {
    return grammar_error("output shape must be chart_series or table");
  }

  if (auto err = check_order(program.pipeline)) return *err;
  return program;
}

namespace {

void collect_predicate_columns(const Predicate& p, std::vector<std::string>& out) {
  if (p.kind == Predicate::Kind::cmp) {
    out.push_back(p.cmp.column);
    return;
  }
  for (const auto& child : p.children) collect_predicate_columns(child, out);
}

void collect_expr_columns(const Expr& e, std::vector<std::string>& out) {
  if (e.kind == Expr::Kind::column) {
    out.push_back(e.column);
    return;
  }
  for (const auto& child : e.children) collect_expr_columns(child, out);
}

}  // namespace

std::optional<ErrorTrace> validate_against_plan(const TransformProgram& program,
                                                const AnalysisPlan& plan) {
  // Names the program may touch: the plan's declared fields plus anything the
  // program itself introduces (derive names, aggregation aliases).
  std::unordered_set<std::string> allowed(plan.fields_used.begin(),
                                          plan.fields_used.end());
  std::vector<std::string> used;
  bool has_filter = false, has_group = false, has_sort = false;
  for (const auto& step : program.pipeline) {
    switch (step.kind) {
      case Step::Kind::select:
        used.insert(used.end(), step.columns.begin(), step.columns.end());
        break;
      case Step::Kind::filter:
        has_filter = true;
        collect_predicate_columns(step.predicate, used);
        break;
      case Step::Kind::derive:
        collect_expr_columns(step.expr, used);
        allowed.insert(step.name);
        break;
      case Step::Kind::group_by:
        has_group = true;
        used.insert(used.end(), step.keys.begin(), step.keys.end());
        for (const auto& agg : step.aggregations) {
          used.push_back(agg.column);
          allowed.insert(agg.alias);
        }
        break;
      case Step::Kind::sort:
        has_sort = true;
        used.push_back(step.sort_key);
        if (step.tiebreak) used.push_back(*step.tiebreak);
        break;
      case Step::Kind::limit:
        break;
    }
  }
  if (program.output.shape == OutputSpec::Shape::chart_series) {
    used.push_back(program.output.label_column);
    for (const auto& series : program.output.series) used.push_back(series.column);
  }

  for (const auto& name : used) {
    if (!allowed.count(name)) {
      ErrorTrace t{ErrorCode::plan_mismatch,
                   "program touches a column the plan does not declare"};
      t.offending_symbol = name;
      return t;
    }
  }

  // Shape consistency with the declared intent. summary places no structural
  // demand; the other families each require their signature step or output.
  const char* missing = nullptr;
  switch (plan.transformation_type) {
    case TransformationType::summary:
      break;
    case TransformationType::filter:
      if (!has_filter) missing = "a filter step";
      break;
    case TransformationType::group:
      if (!has_group) missing = "a group_by step";
      break;
    case TransformationType::rank:
    case TransformationType::trend:
      if (!has_sort) missing = "a sort step";
      break;
    case TransformationType::correlate:
      if (program.output.shape != OutputSpec::Shape::chart_series ||
          program.output.series.size() < 2)
        missing = "a chart_series output with at least two series";
      break;
  }
  if (missing) {
    ErrorTrace t{ErrorCode::plan_mismatch,
                 std::string("plan declares ") +
                     transformation_type_name(plan.transformation_type) +
                     " but the program lacks " + missing};
    return t;
  }
  return std::nullopt;
}

}  // namespace strot
