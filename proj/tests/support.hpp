#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "strot/dataset.hpp"

// Test-side plumbing: fixture locations come from the environment so the
// binaries work both under ctest and when run by hand from the build tree.

namespace testsupport {

inline std::string fixtures_dir() {
  if (const char* env = std::getenv("STROT_FIXTURES_DIR")) return env;
#ifdef STROT_FIXTURES_FALLBACK
  return STROT_FIXTURES_FALLBACK;
#else
  return "fixtures";
#endif
}

inline std::string fixture_path(const std::string& relative) {
  return fixtures_dir() + "/" + relative;
}

inline std::string cli_path() {
  if (const char* env = std::getenv("STROT_CLI_BIN")) return env;
#ifdef STROT_CLI_FALLBACK
  return STROT_CLI_FALLBACK;
#else
  return "strot";
#endif
}

// Builds a small all-text dataset the way load_csv would: every cell stays a
// raw string and typing is left to the consumers.
inline strot::Dataset make_dataset(std::vector<std::string> names,
                                   std::vector<std::vector<std::string>> rows) {
  strot::Dataset dataset;
  dataset.name = "inline";
  dataset.row_count = rows.size();
  for (std::size_t j = 0; j < names.size(); ++j) {
    strot::Column column;
    column.name = names[j];
    for (const auto& row : rows) column.cells.emplace_back(row[j]);
    dataset.columns.push_back(std::move(column));
  }
  return dataset;
}

}  // namespace testsupport
