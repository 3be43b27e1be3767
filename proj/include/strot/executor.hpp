#pragma once

#include <string>
#include <vector>

#include "strot/dataset.hpp"
#include "strot/dsl.hpp"
#include "strot/error.hpp"
#include "strot/util.hpp"

namespace strot {

struct ChartSeries {
  std::string label;
  std::vector<double> data;
};

// The structured result a session hands back: either chart-ready label/series
// arrays or a plain table. Chart data is always finite; table cells keep the
// original text rendering.
struct ResultPayload {
  OutputSpec::Shape shape = OutputSpec::Shape::table;

  // chart_series
  std::vector<std::string> labels;
  std::vector<ChartSeries> datasets;

  // table
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

ojson payload_to_json(const ResultPayload& payload);
Result<ResultPayload> payload_from_json(const ojson& object);

// Deterministic evaluation of a validated program. Cells parse on demand:
// unparseable or sentinel values act as nulls, aggregations skip them, and a
// null that reaches chart output is an OutputShapeMismatch. Zero output rows
// is an error (EmptyResult), not an empty payload.
Result<ResultPayload> execute(const TransformProgram& program, const Dataset& dataset);

// Pearson correlation over two numeric columns, pairwise-complete rows only.
Result<double> pearson(const Dataset& dataset, const std::string& col_a,
                       const std::string& col_b);

}  // namespace strot
