#include "strot/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace strot {
namespace {

// One-pass RFC-4180 field splitter. Handles quoted fields, doubled quotes,
// CRLF and bare LF terminators, and line breaks embedded inside quotes.
// Returns an error trace for structurally broken quoting.
struct CsvReader {
  std::string_view input;
  std::size_t pos = 0;
  char delimiter;

  bool at_end() const { return pos >= input.size(); }

  // Reads one record into `fields`. Returns false at end of input,
  // sets `err` on malformed quoting.
  bool next_record(std::vector<std::string>& fields, std::optional<ErrorTrace>& err) {
    fields.clear();
    if (at_end()) return false;

    std::string field;
    bool in_quotes = false;
    bool quoted_field = false;

    while (pos < input.size()) {
      char c = input[pos];
      if (in_quotes) {
        if (c == '"') {
          if (pos + 1 < input.size() && input[pos + 1] == '"') {
            field.push_back('"');
            pos += 2;
          } else {
            in_quotes = false;
            ++pos;
          }
        } else {
          field.push_back(c);
          ++pos;
        }
        continue;
      }
      if (c == '"') {
        if (!field.empty() || quoted_field) {
          err = ErrorTrace{ErrorCode::malformed_csv,
                           "quote character inside unquoted field"};
          return false;
        }
        in_quotes = true;
        quoted_field = true;
        ++pos;
        continue;
      }
      if (c == delimiter) {
        fields.push_back(std::move(field));
        field.clear();
        quoted_field = false;
        ++pos;
        continue;
      }
      if (c == '\r' || c == '\n') {
        if (c == '\r' && pos + 1 < input.size() && input[pos + 1] == '\n') {
          pos += 2;
        } else {
          ++pos;
        }
        fields.push_back(std::move(field));
        return true;
      }
      field.push_back(c);
      ++pos;
    }

    if (in_quotes) {
      err = ErrorTrace{ErrorCode::malformed_csv, "unterminated quoted field"};
      return false;
    }
    fields.push_back(std::move(field));
    return true;
  }
};

std::string default_column_name(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "c%zu", index + 1);
  return buf;
}

}  // namespace

Result<Dataset> load_csv(std::string_view bytes, const CsvOptions& options,
                         std::string_view name) {
  CsvReader reader{bytes, 0, options.delimiter};
  std::vector<std::string> fields;
  std::optional<ErrorTrace> err;

  Dataset ds;
  ds.name = std::string(name);

  if (!reader.next_record(fields, err)) {
    if (err) return *err;
    return ErrorTrace{ErrorCode::empty_input, "no rows in input"};
  }

  std::size_t width = fields.size();
  std::size_t data_row = 0;

  if (options.has_header) {
    std::unordered_set<std::string> seen;
    for (std::size_t j = 0; j < width; ++j) {
      std::string header = trim(fields[j]);
      if (header.empty()) header = default_column_name(j);
      if (!seen.insert(header).second) {
        ErrorTrace t{ErrorCode::duplicate_column, "duplicate column name"};
        t.offending_symbol = header;
        return t;
      }
      ds.columns.push_back(Column{std::move(header), {}});
    }
  } else {
    for (std::size_t j = 0; j < width; ++j)
      ds.columns.push_back(Column{default_column_name(j), {}});
    for (std::size_t j = 0; j < width; ++j)
      ds.columns[j].cells.emplace_back(std::move(fields[j]));
    ds.row_count = 1;
    data_row = 1;
  }

  while (reader.next_record(fields, err)) {
    ++data_row;
    // A lone trailing newline yields one empty field; skip it rather than
    // report a ragged final row.
    if (fields.size() == 1 && fields[0].empty() && reader.at_end() && width != 1) break;
    if (fields.size() != width) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "row %zu has %zu fields, expected %zu",
                    data_row, fields.size(), width);
      ErrorTrace t{ErrorCode::ragged_row, buf};
      return t;
    }
    for (std::size_t j = 0; j < width; ++j)
      ds.columns[j].cells.emplace_back(std::move(fields[j]));
    ++ds.row_count;
  }
  if (err) return *err;

  if (options.has_header && ds.row_count == 0)
    return ErrorTrace{ErrorCode::empty_input, "header present but no data rows"};

  return ds;
}

Result<Dataset> load_csv_file(const std::string& path, const CsvOptions& options) {
  auto bytes = read_file(path);
  if (!bytes) {
    ErrorTrace t{ErrorCode::io_error, "cannot read file"};
    t.offending_symbol = path;
    return t;
  }
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos)
    stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos && dot > 0)
    stem = stem.substr(0, dot);
  return load_csv(*bytes, options, stem);
}

Result<const Column*> get_column(const Dataset& dataset, std::string_view name) {
  for (const auto& col : dataset.columns)
    if (col.name == name) return &col;

  ErrorTrace t{ErrorCode::unknown_column, "column not found"};
  t.offending_symbol = std::string(name);
  t.suggestions = nearest_names(name, column_names(dataset));
  return t;
}

std::vector<std::string> column_names(const Dataset& dataset) {
  std::vector<std::string> names;
  names.reserve(dataset.columns.size());
  for (const auto& col : dataset.columns) names.push_back(col.name);
  return names;
}

std::string to_csv(const Dataset& dataset, char delimiter) {
  auto needs_quoting = [delimiter](const std::string& s) {
    return s.find_first_of("\"\r\n") != std::string::npos ||
           s.find(delimiter) != std::string::npos;
  };
  auto emit = [&](std::string& out, const std::string& s) {
    if (!needs_quoting(s)) {
      out += s;
      return;
    }
    out.push_back('"');
    for (char c : s) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
  };

  std::string out;
  for (std::size_t j = 0; j < dataset.columns.size(); ++j) {
    if (j) out.push_back(delimiter);
    emit(out, dataset.columns[j].name);
  }
  out.push_back('\n');
  for (std::size_t i = 0; i < dataset.row_count; ++i) {
    for (std::size_t j = 0; j < dataset.columns.size(); ++j) {
      if (j) out.push_back(delimiter);
      emit(out, cell_text(dataset.columns[j].cells[i]));
    }
    out.push_back('\n');
  }
  return out;
}

ojson debug_dump(const Dataset& dataset) {
  ojson j;
  j["name"] = dataset.name;
  j["rows"] = dataset.row_count;
  ojson cols = ojson::array();
  for (const auto& col : dataset.columns) {
    ojson c;
    c["name"] = col.name;
    cols.push_back(std::move(c));
  }
  j["columns"] = std::move(cols);
  return j;
}

}  // namespace strot
