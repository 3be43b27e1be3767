#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strot/dataset.hpp"
#include "strot/error.hpp"
#include "strot/util.hpp"

namespace strot {

// Semantic column type. Inference is resolved in this precedence order:
// temporal, then numerical, then categorical as the fallback.
enum class SemanticType { numerical, categorical, temporal };

const char* semantic_type_name(SemanticType type);

// Distribution summary for one column. Counting fields are populated for
// every column; bounds, mean and skewness only when the type warrants them.
struct ColumnSignature {
  std::size_t rows = 0;
  std::size_t non_null = 0;
  std::size_t distinct = 0;       // distinct non-null raw texts
  double null_fraction = 0.0;
  double entropy_bits = 0.0;      // Shannon entropy of the value frequencies
  bool all_null = false;

  // numerical columns
  std::optional<double> minimum;
  std::optional<double> maximum;
  std::optional<double> mean;
  std::optional<double> skewness;  // population m3 / m2^1.5, needs n >= 3

  // temporal columns, ISO-8601
  std::optional<std::string> earliest;
  std::optional<std::string> latest;
};

struct ColumnProfile {
  std::string name;
  SemanticType type = SemanticType::categorical;
  ColumnSignature signature;
  std::vector<std::string> samples;  // raw cell text, at most k, all distinct
};

struct SchemaContext {
  std::string dataset_name;
  std::size_t row_count = 0;
  std::vector<ColumnProfile> columns;
};

struct ProfilerConfig {
  std::size_t sample_count = 5;  // k
  std::uint64_t seed = 42;

  // A column is temporal/numerical when at least this fraction of its
  // non-null cells parses as such.
  double temporal_threshold = 0.95;
  double numeric_threshold = 0.95;

  // Numeric-looking columns with few distinct values stay categorical
  // (status codes, small enums). Both gates must pass.
  std::size_t numeric_min_distinct = 10;
  double numeric_min_distinct_ratio = 0.05;

  // Sample values longer than this are cut at render time, not in storage.
  std::size_t render_sample_chars = 16;
};

ColumnProfile profile_column(const Column& column, const ProfilerConfig& config = {});

SchemaContext build_context(const Dataset& dataset, const ProfilerConfig& config = {});

// Compact prompt text: one header line, then one line per column.
std::string render_context(const SchemaContext& context,
                           const ProfilerConfig& config = {});

// Canonical JSON form. The digest is the FNV-1a hash of its dump and ties a
// transcript to the exact context a session saw.
ojson context_to_json(const SchemaContext& context);
std::string context_digest(const SchemaContext& context);

}  // namespace strot
