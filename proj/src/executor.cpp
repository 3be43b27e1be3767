#include "strot/executor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "strot/cell.hpp"

namespace strot {
namespace {

// Row-major working table; cheap to filter and regroup at desk scale.
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<Cell>> rows;

  int index_of(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return static_cast<int>(j);
    return -1;
  }
};

bool is_null_cell(const Cell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return true;
  if (const auto* text = std::get_if<std::string>(&cell))
    return is_null_text(*text);
  return false;
}

// Numeric reading of a cell: integers and reals directly, text through the
// strict parser, everything else (nulls, junk, timestamps) is absent.
std::optional<double> numeric_view(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell))
    return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  if (const auto* text = std::get_if<std::string>(&cell)) {
    if (is_null_text(*text)) return std::nullopt;
    return parse_number(*text);
  }
  return std::nullopt;
}

ErrorTrace defensive_unknown(const std::string& name, const Table& table,
                             std::optional<int> step_index = {}) {
  ErrorTrace t{ErrorCode::unknown_column, "column missing at execution time"};
  t.offending_symbol = name;
  t.suggestions = nearest_names(name, table.names);
  t.step_index = step_index;
  return t;
}

bool eval_comparison(const Comparison& cmp, const Cell& cell) {
  if (is_null_cell(cell)) return false;
  int order;  // sign of (cell - literal)
  if (cmp.value.is_number) {
    auto v = numeric_view(cell);
    if (!v) return false;
    order = (*v < cmp.value.number) ? -1 : (*v > cmp.value.number ? 1 : 0);
  } else {
    std::string text = cell_text(cell);
    order = text.compare(cmp.value.text);
    order = order < 0 ? -1 : (order > 0 ? 1 : 0);
  }
  switch (cmp.op) {
    case CmpOp::eq: return order == 0;
    case CmpOp::ne: return order != 0;
    case CmpOp::lt: return order < 0;
    case CmpOp::le: return order <= 0;
    case CmpOp::gt: return order > 0;
    case CmpOp::ge: return order >= 0;
  }
  return false;
}

bool eval_predicate(const Predicate& p, const Table& table,
                    const std::vector<Cell>& row) {
  switch (p.kind) {
    case Predicate::Kind::cmp: {
      int j = table.index_of(p.cmp.column);
      if (j < 0) return false;  // unreachable for validated programs
      return eval_comparison(p.cmp, row[static_cast<std::size_t>(j)]);
    }
    case Predicate::Kind::conj:
      for (const auto& child : p.children)
        if (!eval_predicate(child, table, row)) return false;
      return true;
    case Predicate::Kind::disj:
      for (const auto& child : p.children)
        if (eval_predicate(child, table, row)) return true;
      return false;
    case Predicate::Kind::negation:
      return !eval_predicate(p.children.front(), table, row);
  }
  return false;
}

// Null operands propagate; a denominator of exactly zero is the one hard
// arithmetic fault.
Result<std::optional<double>> eval_expr(const Expr& e, const Table& table,
                                        const std::vector<Cell>& row,
                                        int step_index) {
  switch (e.kind) {
    case Expr::Kind::column: {
      int j = table.index_of(e.column);
      if (j < 0) return defensive_unknown(e.column, table, step_index);
      return numeric_view(row[static_cast<std::size_t>(j)]);
    }
    case Expr::Kind::literal:
      return std::optional<double>(e.literal);
    case Expr::Kind::binary: {
      auto left = eval_expr(e.children[0], table, row, step_index);
      if (!left.ok()) return left.error();
      auto right = eval_expr(e.children[1], table, row, step_index);
      if (!right.ok()) return right.error();
      auto lv = left.take();
      auto rv = right.take();
      if (e.op == '/') {
        if (rv && *rv == 0.0) {
          ErrorTrace t{ErrorCode::division_by_zero, "division by zero"};
          t.step_index = step_index;
          t.offending_symbol =
              e.children[1].kind == Expr::Kind::column ? e.children[1].column : "";
          if (t.offending_symbol->empty()) t.offending_symbol.reset();
          return t;
        }
      }
      if (!lv || !rv) return std::optional<double>{};
      switch (e.op) {
        case '+': return std::optional<double>(*lv + *rv);
        case '-': return std::optional<double>(*lv - *rv);
        case '*': return std::optional<double>(*lv * *rv);
        case '/': return std::optional<double>(*lv / *rv);
      }
      return std::optional<double>{};
    }
  }
  return std::optional<double>{};
}

Result<Cell> aggregate(Agg agg, const std::vector<double>& values,
                       std::size_t non_null_count, int step_index,
                       const std::string& alias) {
  auto empty_error = [&] {
    ErrorTrace t{ErrorCode::empty_aggregate,
                 std::string(agg_name(agg)) + " over zero non-null values"};
    t.step_index = step_index;
    t.offending_symbol = alias;
    return t;
  };
  switch (agg) {
    case Agg::sum:
      // Sum of nothing is zero by convention; the other aggregates refuse.
      return Cell(pairwise_sum(values.data(), values.size()));
    case Agg::mean: {
      if (values.empty()) return empty_error();
      return Cell(pairwise_sum(values.data(), values.size()) /
                  static_cast<double>(values.size()));
    }
    case Agg::min: {
      if (values.empty()) return empty_error();
      return Cell(*std::min_element(values.begin(), values.end()));
    }
    case Agg::max: {
      if (values.empty()) return empty_error();
      return Cell(*std::max_element(values.begin(), values.end()));
    }
    case Agg::count:
      return Cell(static_cast<std::int64_t>(non_null_count));
  }
  return Cell(0.0);
}

// Sort order: numerics first, then texts, nulls always last; direction flips
// value order only, never the class order. The tiebreak column compares
// ascending. Stable sort keeps input order for full ties.
int sort_class(const Cell& cell) {
  if (is_null_cell(cell)) return 2;
  return numeric_view(cell) ? 0 : 1;
}

int compare_cells(const Cell& a, const Cell& b, bool descending) {
  int ca = sort_class(a), cb = sort_class(b);
  if (ca != cb) return ca < cb ? -1 : 1;
  if (ca == 2) return 0;
  int order;
  if (ca == 0) {
    double va = *numeric_view(a), vb = *numeric_view(b);
    order = va < vb ? -1 : (va > vb ? 1 : 0);
  } else {
    std::string ta = cell_text(a), tb = cell_text(b);
    order = ta.compare(tb);
    order = order < 0 ? -1 : (order > 0 ? 1 : 0);
  }
  return descending ? -order : order;
}

}  // namespace

ojson payload_to_json(const ResultPayload& payload) {
  ojson j;
  if (payload.shape == OutputSpec::Shape::chart_series) {
    j["labels"] = payload.labels;
    ojson datasets = ojson::array();
    for (const auto& series : payload.datasets) {
      ojson d;
      d["label"] = series.label;
      d["data"] = series.data;
      datasets.push_back(std::move(d));
    }
    j["datasets"] = std::move(datasets);
  } else {
    j["columns"] = payload.columns;
    j["rows"] = payload.rows;
  }
  return j;
}

Result<ResultPayload> payload_from_json(const ojson& object) {
  ResultPayload payload;
  if (!object.is_object()) {
    return ErrorTrace{ErrorCode::malformed_object, "result payload must be an object"};
  }
  if (object.contains("labels") && object.contains("datasets")) {
    payload.shape = OutputSpec::Shape::chart_series;
    if (!object["labels"].is_array() || !object["datasets"].is_array()) {
      return ErrorTrace{ErrorCode::malformed_object,
                        "chart payload needs 'labels' and 'datasets' arrays"};
    }
    for (const auto& label : object["labels"]) {
      if (!label.is_string()) {
        return ErrorTrace{ErrorCode::malformed_object, "chart labels must be strings"};
      }
      payload.labels.push_back(label.get<std::string>());
    }
    for (const auto& d : object["datasets"]) {
      if (!d.is_object() || !d.contains("label") || !d["label"].is_string() ||
          !d.contains("data") || !d["data"].is_array()) {
        return ErrorTrace{ErrorCode::malformed_object,
                          "each dataset needs a 'label' string and 'data' array"};
      }
      ChartSeries series;
      series.label = d["label"].get<std::string>();
      for (const auto& v : d["data"]) {
        if (!v.is_number()) {
          return ErrorTrace{ErrorCode::malformed_object, "series data must be numeric"};
        }
        series.data.push_back(v.get<double>());
      }
      payload.datasets.push_back(std::move(series));
    }
    return payload;
  }
  if (object.contains("columns") && object.contains("rows")) {
    payload.shape = OutputSpec::Shape::table;
    if (!object["columns"].is_array() || !object["rows"].is_array()) {
      return ErrorTrace{ErrorCode::malformed_object,
                        "table payload needs 'columns' and 'rows' arrays"};
    }
    for (const auto& c : object["columns"]) {
      if (!c.is_string()) {
        return ErrorTrace{ErrorCode::malformed_object, "table columns must be strings"};
      }
      payload.columns.push_back(c.get<std::string>());
    }
    for (const auto& row : object["rows"]) {
      if (!row.is_array()) {
        return ErrorTrace{ErrorCode::malformed_object, "table rows must be arrays"};
      }
      std::vector<std::string> cells;
      for (const auto& cell : row) {
        if (!cell.is_string()) {
          return ErrorTrace{ErrorCode::malformed_object, "table cells must be strings"};
        }
        cells.push_back(cell.get<std::string>());
      }
      payload.rows.push_back(std::move(cells));
    }
    return payload;
  }
  return ErrorTrace{ErrorCode::malformed_object,
                    "payload matches neither chart_series nor table shape"};
}

Result<ResultPayload> execute(const TransformProgram& program, const Dataset& dataset) {
  Table table;
  table.names = column_names(dataset);
  table.rows.resize(dataset.row_count);
  for (std::size_t i = 0; i < dataset.row_count; ++i) {
    table.rows[i].reserve(dataset.columns.size());
    for (const auto& col : dataset.columns) table.rows[i].push_back(col.cells[i]);
  }

  for (std::size_t s = 0; s < program.pipeline.size(); ++s) {
    const Step& step = program.pipeline[s];
    int idx = static_cast<int>(s);
    switch (step.kind) {
      case Step::Kind::select: {
        std::vector<int> keep;
        for (const auto& name : step.columns) {
          int j = table.index_of(name);
          if (j < 0) return defensive_unknown(name, table, idx);
          keep.push_back(j);
        }
        Table next;
        next.names = step.columns;
        next.rows.reserve(table.rows.size());
        for (auto& row : table.rows) {
          std::vector<Cell> slim;
          slim.reserve(keep.size());
          for (int j : keep) slim.push_back(std::move(row[static_cast<std::size_t>(j)]));
          next.rows.push_back(std::move(slim));
        }
        table = std::move(next);
        break;
      }
      case Step::Kind::filter: {
        std::vector<std::vector<Cell>> kept;
        kept.reserve(table.rows.size());
        for (auto& row : table.rows)
          if (eval_predicate(step.predicate, table, row)) kept.push_back(std::move(row));
        table.rows = std::move(kept);
        break;
      }
      case Step::Kind::derive: {
        for (auto& row : table.rows) {
          auto value = eval_expr(step.expr, table, row, idx);
          if (!value.ok()) return value.error();
          auto v = value.take();
          row.push_back(v ? Cell(*v) : Cell(std::monostate{}));
        }
        table.names.push_back(step.name);
        break;
      }
      case Step::Kind::group_by: {
        std::vector<int> key_idx;
        for (const auto& key : step.keys) {
          int j = table.index_of(key);
          if (j < 0) return defensive_unknown(key, table, idx);
          key_idx.push_back(j);
        }
        std::vector<int> src_idx;
        for (const auto& agg : step.aggregations) {
          int j = table.index_of(agg.column);
          if (j < 0) return defensive_unknown(agg.column, table, idx);
          src_idx.push_back(j);
        }

        // Buckets in first-seen key order.
        std::unordered_map<std::string, std::size_t> bucket_of;
        struct Bucket {
          std::vector<Cell> key_cells;
          std::vector<std::vector<double>> values;  // per aggregation
          std::vector<std::size_t> non_null;        // per aggregation
        };
        std::vector<Bucket> buckets;
        for (const auto& row : table.rows) {
          std::string key;
          for (int j : key_idx) {
            key += cell_text(row[static_cast<std::size_t>(j)]);
            key.push_back('\x1f');  // unit separator keeps key parts apart
          }
          auto [it, inserted] = bucket_of.try_emplace(key, buckets.size());
          if (inserted) {
            Bucket b;
            for (int j : key_idx) b.key_cells.push_back(row[static_cast<std::size_t>(j)]);
            b.values.resize(step.aggregations.size());
            b.non_null.resize(step.aggregations.size(), 0);
            buckets.push_back(std::move(b));
          }
          Bucket& bucket = buckets[it->second];
          for (std::size_t a = 0; a < step.aggregations.size(); ++a) {
            const Cell& cell = row[static_cast<std::size_t>(src_idx[a])];
            if (!is_null_cell(cell)) ++bucket.non_null[a];
            if (auto v = numeric_view(cell)) bucket.values[a].push_back(*v);
          }
        }

        Table next;
        next.names = step.keys;
        for (const auto& agg : step.aggregations) next.names.push_back(agg.alias);
        next.rows.reserve(buckets.size());
        for (auto& bucket : buckets) {
          std::vector<Cell> row = std::move(bucket.key_cells);
          for (std::size_t a = 0; a < step.aggregations.size(); ++a) {
            auto cell = aggregate(step.aggregations[a].agg, bucket.values[a],
                                  bucket.non_null[a], idx,
                                  step.aggregations[a].alias);
            if (!cell.ok()) return cell.error();
            row.push_back(cell.take());
          }
          next.rows.push_back(std::move(row));
        }
        table = std::move(next);
        break;
      }
      case Step::Kind::sort: {
        int j = table.index_of(step.sort_key);
        if (j < 0) return defensive_unknown(step.sort_key, table, idx);
        int tj = -1;
        if (step.tiebreak) {
          tj = table.index_of(*step.tiebreak);
          if (tj < 0) return defensive_unknown(*step.tiebreak, table, idx);
        }
        std::stable_sort(
            table.rows.begin(), table.rows.end(),
            [&](const std::vector<Cell>& a, const std::vector<Cell>& b) {
              int order = compare_cells(a[static_cast<std::size_t>(j)],
                                        b[static_cast<std::size_t>(j)],
                                        step.descending);
              if (order != 0) return order < 0;
              if (tj >= 0) {
                order = compare_cells(a[static_cast<std::size_t>(tj)],
                                      b[static_cast<std::size_t>(tj)], false);
                if (order != 0) return order < 0;
              }
              return false;
            });
        break;
      }
      case Step::Kind::limit:
        if (table.rows.size() > static_cast<std::size_t>(step.count))
          table.rows.resize(static_cast<std::size_t>(step.count));
        break;
    }
  }

  if (table.rows.empty())
    return ErrorTrace{ErrorCode::empty_result, "pipeline produced zero rows"};

  ResultPayload payload;
  payload.shape = program.output.shape;
  if (program.output.shape == OutputSpec::Shape::chart_series) {
    int lj = table.index_of(program.output.label_column);
    if (lj < 0) return defensive_unknown(program.output.label_column, table);
    for (const auto& row : table.rows)
      payload.labels.push_back(cell_text(row[static_cast<std::size_t>(lj)]));
    for (const auto& spec : program.output.series) {
      int j = table.index_of(spec.column);
      if (j < 0) return defensive_unknown(spec.column, table);
      ChartSeries series;
      series.label = spec.label;
      series.data.reserve(table.rows.size());
      for (const auto& row : table.rows) {
        auto v = numeric_view(row[static_cast<std::size_t>(j)]);
        if (!v || !std::isfinite(*v)) {
          ErrorTrace t{ErrorCode::output_shape_mismatch,
                       "series cell is not a finite number"};
          t.offending_symbol = spec.column;
          return t;
        }
        series.data.push_back(*v);
      }
      payload.datasets.push_back(std::move(series));
    }
  } else {
    payload.columns = table.names;
    payload.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
      std::vector<std::string> texts;
      texts.reserve(row.size());
      for (const auto& cell : row) texts.push_back(cell_text(cell));
      payload.rows.push_back(std::move(texts));
    }
  }
  return payload;
}

Result<double> pearson(const Dataset& dataset, const std::string& col_a,
                       const std::string& col_b) {
  auto a = get_column(dataset, col_a);
  if (!a.ok()) return a.error();
  auto b = get_column(dataset, col_b);
  if (!b.ok()) return b.error();

  auto check_numeric = [](const Column& col) -> std::optional<ErrorTrace> {
    std::size_t non_null = 0, parsed = 0;
    for (const auto& cell : col.cells) {
      if (is_null_cell(cell)) continue;
      ++non_null;
      if (numeric_view(cell)) ++parsed;
    }
    if (non_null > 0 && parsed == 0) {
      ErrorTrace t{ErrorCode::type_mismatch, "column has no numeric values"};
      t.offending_symbol = col.name;
      return t;
    }
    return std::nullopt;
  };
  if (auto err = check_numeric(*a.value())) return *err;
  if (auto err = check_numeric(*b.value())) return *err;

  std::vector<double> xs, ys;
  std::size_t rows = std::min(a.value()->cells.size(), b.value()->cells.size());
  for (std::size_t i = 0; i < rows; ++i) {
    auto x = numeric_view(a.value()->cells[i]);
    auto y = numeric_view(b.value()->cells[i]);
    if (x && y) {
      xs.push_back(*x);
      ys.push_back(*y);
    }
  }
  if (xs.size() < 2)
    return ErrorTrace{ErrorCode::insufficient_data,
                      "need at least two complete pairs"};

  double n = static_cast<double>(xs.size());
  double mx = pairwise_sum(xs.data(), xs.size()) / n;
  double my = pairwise_sum(ys.data(), ys.size()) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    ErrorTrace t{ErrorCode::zero_variance, "a column is constant over the pairs"};
    t.offending_symbol = sxx == 0.0 ? col_a : col_b;
    return t;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace strot
