#pragma once

// Reference implementations used only by tests. Everything here recomputes
// results from first principles, row at a time, sharing no evaluation code
// with the library, so agreement between the two is meaningful evidence.

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "strot/dataset.hpp"
#include "strot/dsl.hpp"
#include "strot/error.hpp"

namespace oracle {

struct Value {
  enum class Kind { null, number, text };
  Kind kind = Kind::null;
  double number = 0.0;
  std::string text;

  static Value null_value() { return {}; }
  static Value num(double v) { return {Kind::number, v, {}}; }
  static Value raw(std::string s) { return {Kind::text, 0.0, std::move(s)}; }
};

struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<Value>> rows;
};

struct Outcome {
  bool ok = false;
  strot::ErrorCode code = strot::ErrorCode::empty_result;
  Table table;
};

// Reference pipeline evaluation, mirroring the documented semantics with a
// naive row-at-a-time interpreter and plain left-to-right accumulation.
Outcome evaluate(const strot::TransformProgram& program, const strot::Dataset& dataset);

// Brute-force per-key sums over the named numeric columns, keys in first-seen
// row order.
std::vector<std::pair<std::string, std::vector<double>>> group_sums(
    const strot::Dataset& dataset, const std::string& key_column,
    const std::vector<std::string>& value_columns);

// Textbook two-pass Pearson correlation.
double pearson_reference(const std::vector<double>& xs, const std::vector<double>& ys);

// Random dataset/program pairs for equivalence testing. integers_only
// restricts data and operations so every produced number is exactly
// representable, making exact comparison valid.
struct RandomCase {
  strot::Dataset dataset;
  strot::TransformProgram program;
};

RandomCase random_case(std::mt19937& rng, bool integers_only);

// A random column of raw cell texts (may include null sentinels).
strot::Column random_column(std::mt19937& rng, std::size_t rows);

}  // namespace oracle
