#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace strot {

// UTC instant, second precision. Round-trips losslessly through ISO-8601.
struct Timestamp {
  std::int64_t seconds_utc = 0;
  auto operator<=>(const Timestamp&) const = default;
};

using Cell = std::variant<std::monostate, std::int64_t, double, std::string, Timestamp>;

enum class CellKind { null, integer, real, text, timestamp };

CellKind cell_kind(const Cell& cell);
std::string_view cell_kind_name(CellKind kind);

std::string to_iso8601(Timestamp t);  // "2020-07-27T00:00:00Z"
std::optional<Timestamp> parse_iso8601(std::string_view text);

enum class TemporalFormat {
  iso_date,        // 2020-07-27
  iso_datetime,    // 2020-07-27T13:05:00 or ... 13:05:00Z
  ymd_slash,       // 2020/07/27
  mdy_slash,       // 07/27/2020
  dmy_month_name,  // 27-Jul-2020
};

std::optional<Timestamp> parse_temporal(std::string_view text,
                                        const std::vector<TemporalFormat>& formats);

// Strict numeric parse: full-token, finite; surrounding whitespace tolerated.
std::optional<double> parse_number(std::string_view text);

// Null sentinels shared by profiling and execution: empty, "na", "null"
// (case-insensitive, surrounding whitespace ignored).
bool is_null_text(std::string_view text);

// Text rendering used by samples, labels, and table output. Doubles use the
// shortest round-trip form; timestamps render as ISO-8601.
std::string cell_text(const Cell& cell);

}  // namespace strot
