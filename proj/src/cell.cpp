#include "strot/cell.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "strot/util.hpp"

namespace strot {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y += m <= 2;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

bool valid_date(int y, int m, int d) {
  if (y < 1 || y > 9999 || m < 1 || m > 12 || d < 1) return false;
  static constexpr std::array<int, 12> days{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int limit = days[static_cast<std::size_t>(m - 1)];
  if (m == 2 && is_leap(y)) limit = 29;
  return d <= limit;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

bool parse_int_field(std::string_view s, int& out) {
  if (!all_digits(s)) return false;
  out = 0;
  for (char c : s) out = out * 10 + (c - '0');
  return true;
}

std::optional<Timestamp> make_ts(int y, int mo, int d, int h, int mi, int s) {
  if (!valid_date(y, mo, d)) return std::nullopt;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
  return Timestamp{days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s};
}

std::optional<Timestamp> parse_date_sep(std::string_view text, char sep, bool month_first) {
  // month_first: MM/DD/YYYY, otherwise YYYY?MM?DD.
  const std::size_t p1 = text.find(sep);
  if (p1 == std::string_view::npos) return std::nullopt;
  const std::size_t p2 = text.find(sep, p1 + 1);
  if (p2 == std::string_view::npos || text.find(sep, p2 + 1) != std::string_view::npos) {
    return std::nullopt;
  }
  int a = 0, b = 0, c = 0;
  if (!parse_int_field(text.substr(0, p1), a) ||
      !parse_int_field(text.substr(p1 + 1, p2 - p1 - 1), b) ||
      !parse_int_field(text.substr(p2 + 1), c)) {
    return std::nullopt;
  }
  if (month_first) {
    if (text.substr(p2 + 1).size() != 4) return std::nullopt;
    return make_ts(c, a, b, 0, 0, 0);
  }
  if (text.substr(0, p1).size() != 4) return std::nullopt;
  return make_ts(a, b, c, 0, 0, 0);
}

std::optional<int> month_from_name(std::string_view name) {
  static constexpr std::array<std::string_view, 12> names{
      "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  const std::string low = to_lower(name);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (low == names[i]) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

std::optional<Timestamp> parse_dmy_month_name(std::string_view text) {
  // 27-Jul-2020
  const std::size_t p1 = text.find('-');
  if (p1 == std::string_view::npos) return std::nullopt;
  const std::size_t p2 = text.find('-', p1 + 1);
  if (p2 == std::string_view::npos) return std::nullopt;
  int day = 0, year = 0;
  if (!parse_int_field(text.substr(0, p1), day)) return std::nullopt;
  const auto month = month_from_name(text.substr(p1 + 1, p2 - p1 - 1));
  if (!month) return std::nullopt;
  if (text.substr(p2 + 1).size() != 4 || !parse_int_field(text.substr(p2 + 1), year)) {
    return std::nullopt;
  }
  return make_ts(year, *month, day, 0, 0, 0);
}

std::optional<Timestamp> parse_iso_datetime(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS with optional trailing 'Z'; ' ' accepted for 'T'.
  if (text.size() == 20 && (text.back() == 'Z' || text.back() == 'z')) {
    text.remove_suffix(1);
  }
  if (text.size() != 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_int_field(text.substr(0, 4), y) || !parse_int_field(text.substr(5, 2), mo) ||
      !parse_int_field(text.substr(8, 2), d) || !parse_int_field(text.substr(11, 2), h) ||
      !parse_int_field(text.substr(14, 2), mi) || !parse_int_field(text.substr(17, 2), s)) {
    return std::nullopt;
  }
  return make_ts(y, mo, d, h, mi, s);
}

std::optional<Timestamp> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, mo = 0, d = 0;
  if (!parse_int_field(text.substr(0, 4), y) || !parse_int_field(text.substr(5, 2), mo) ||
      !parse_int_field(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  return make_ts(y, mo, d, 0, 0, 0);
}

}  // namespace

CellKind cell_kind(const Cell& cell) {
  switch (cell.index()) {
    case 0: return CellKind::null;
    case 1: return CellKind::integer;
    case 2: return CellKind::real;
    case 3: return CellKind::text;
    default: return CellKind::timestamp;
  }
}

std::string_view cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::null: return "null";
    case CellKind::integer: return "integer";
    case CellKind::real: return "real";
    case CellKind::text: return "text";
    case CellKind::timestamp: return "timestamp";
  }
  return "null";
}

std::string to_iso8601(Timestamp t) {
  std::int64_t days = t.seconds_utc / 86400;
  std::int64_t rem = t.seconds_utc % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int y = 0, m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return std::string(buf);
}

std::optional<Timestamp> parse_iso8601(std::string_view text) {
  if (auto ts = parse_iso_datetime(text)) return ts;
  return parse_iso_date(text);
}

std::optional<Timestamp> parse_temporal(std::string_view text,
                                        const std::vector<TemporalFormat>& formats) {
  const std::string t = trim(text);
  for (const TemporalFormat f : formats) {
    std::optional<Timestamp> ts;
    switch (f) {
      case TemporalFormat::iso_date: ts = parse_iso_date(t); break;
      case TemporalFormat::iso_datetime: ts = parse_iso_datetime(t); break;
      case TemporalFormat::ymd_slash: ts = parse_date_sep(t, '/', false); break;
      case TemporalFormat::mdy_slash: ts = parse_date_sep(t, '/', true); break;
      case TemporalFormat::dmy_month_name: ts = parse_dmy_month_name(t); break;
    }
    if (ts) return ts;
  }
  return std::nullopt;
}

std::optional<double> parse_number(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  // Reject inf/nan tokens; they are not data values.
  const char first = t[0];
  if (!std::isdigit(static_cast<unsigned char>(first)) && first != '+' && first != '-' &&
      first != '.') {
    return std::nullopt;
  }
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_null_text(std::string_view text) {
  std::string t = to_lower(trim(text));
  return t.empty() || t == "na" || t == "null";
}

std::string cell_text(const Cell& cell) {
  switch (cell_kind(cell)) {
    case CellKind::null: return "";
    case CellKind::integer: {
      char buf[24];
      std::snprintf(buf, sizeof(buf), "%lld",
                    static_cast<long long>(std::get<std::int64_t>(cell)));
      return std::string(buf);
    }
    case CellKind::real: return ojson(std::get<double>(cell)).dump();
    case CellKind::text: return std::get<std::string>(cell);
    case CellKind::timestamp: return to_iso8601(std::get<Timestamp>(cell));
  }
  return "";
}

}  // namespace strot
