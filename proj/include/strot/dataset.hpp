#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "strot/cell.hpp"
#include "strot/error.hpp"
#include "strot/util.hpp"

namespace strot {

struct Column {
  std::string name;
  std::vector<Cell> cells;
};

// In-memory columnar table. Immutable after load: no internal
// synchronization, safe for concurrent readers, mutation is out of contract.
// Every column holds exactly row_count cells; names are unique (trimmed,
// case-sensitive).
struct Dataset {
  std::string name;
  std::vector<Column> columns;
  std::size_t row_count = 0;
};

struct CsvOptions {
  char delimiter = ',';
  bool has_header = true;
};

// RFC-4180 ingestion. Every cell comes out text-typed; typing belongs to the
// profiler. Ragged rows are reported with their 1-based data row index.
Result<Dataset> load_csv(std::string_view bytes, const CsvOptions& options = {},
                         std::string_view name = "dataset");
Result<Dataset> load_csv_file(const std::string& path, const CsvOptions& options = {});

// Exact, case-sensitive lookup. The miss payload carries nearest-name
// suggestions (edit distance <= 2) and doubles as the hallucinated-field
// error trace.
Result<const Column*> get_column(const Dataset& dataset, std::string_view name);

std::vector<std::string> column_names(const Dataset& dataset);

// Minimal-quoting RFC-4180 serialization (fields are quoted only when they
// contain the delimiter, a quote, or a line break).
std::string to_csv(const Dataset& dataset, char delimiter = ',');

// Debug dump: column names, declared cell kinds, row count.
ojson debug_dump(const Dataset& dataset);

}  // namespace strot
