#include <cmath>
#include <random>

#include "doctest.h"
#include "strot/cell.hpp"
#include "strot/dataset.hpp"
#include "strot/util.hpp"
#include "support.hpp"

using namespace strot;

TEST_CASE("csv basic parsing") {
  auto r = load_csv("a,b\n1,2\n3,4\n");
  REQUIRE(r.ok());
  const Dataset& d = r.value();
  CHECK(d.columns.size() == 2);
  CHECK(d.row_count == 2);
  CHECK(d.columns[0].name == "a");
  CHECK(cell_text(d.columns[1].cells[1]) == "4");
}

TEST_CASE("csv quoting rules") {
  auto r = load_csv("name,note\n\"Doe, Jane\",\"said \"\"hi\"\"\"\n\"line\nbreak\",x\n");
  REQUIRE(r.ok());
  const Dataset& d = r.value();
  CHECK(cell_text(d.columns[0].cells[0]) == "Doe, Jane");
  CHECK(cell_text(d.columns[1].cells[0]) == "said \"hi\"");
  CHECK(cell_text(d.columns[0].cells[1]) == "line\nbreak");
}

TEST_CASE("csv crlf and missing trailing newline") {
  auto r = load_csv("a,b\r\n1,2\r\n3,4");
  REQUIRE(r.ok());
  CHECK(r.value().row_count == 2);
  CHECK(cell_text(r.value().columns[1].cells[1]) == "4");
}

TEST_CASE("csv failure modes carry stable codes") {
  CHECK(load_csv("").error().code == ErrorCode::empty_input);
  CHECK(load_csv("a,b\n").error().code == ErrorCode::empty_input);
  CHECK(load_csv("a,a\n1,2\n").error().code == ErrorCode::duplicate_column);
  CHECK(load_csv("a,b\n\"unterminated\n").error().code == ErrorCode::malformed_csv);

  auto ragged = load_csv("a,b\n1,2\n3\n");
  REQUIRE(!ragged.ok());
  CHECK(ragged.error().code == ErrorCode::ragged_row);
  CHECK(ragged.error().message.find("2") != std::string::npos);

  CHECK(!load_csv_file("/no/such/file.csv").ok());
  CHECK(load_csv_file("/no/such/file.csv").error().code == ErrorCode::io_error);
}

TEST_CASE("column lookup misses suggest near names") {
  auto d = load_csv_file(testsupport::fixture_path("covid.csv"));
  REQUIRE(d.ok());

  auto hit = get_column(d.value(), "New cases");
  REQUIRE(hit.ok());

  auto miss = get_column(d.value(), "newcases");
  REQUIRE(!miss.ok());
  CHECK(miss.error().code == ErrorCode::unknown_column);
  REQUIRE(!miss.error().suggestions.empty());
  CHECK(miss.error().suggestions[0] == "New cases");
}

TEST_CASE("csv serialization round trips") {
  const std::string source = "name,note\n\"Doe, Jane\",plain\nBob,\"q\"\"q\"\n";
  auto first = load_csv(source);
  REQUIRE(first.ok());
  auto second = load_csv(to_csv(first.value()));
  REQUIRE(second.ok());
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(cell_text(first.value().columns[j].cells[i]) ==
            cell_text(second.value().columns[j].cells[i]));
}

TEST_CASE("numeric parse is full-token and finite") {
  CHECK(parse_number("12.5") == 12.5);
  CHECK(parse_number(" 42 ") == 42.0);
  CHECK(parse_number("-3") == -3.0);
  CHECK(parse_number("+0.5") == 0.5);
  CHECK(parse_number(".5") == 0.5);
  CHECK(parse_number("1e3") == 1000.0);
  CHECK(!parse_number(""));
  CHECK(!parse_number("abc"));
  CHECK(!parse_number("1.5x"));
  CHECK(!parse_number("12 34"));
  CHECK(!parse_number("inf"));
  CHECK(!parse_number("nan"));
  CHECK(!parse_number("1e999"));
}

TEST_CASE("null sentinels") {
  CHECK(is_null_text(""));
  CHECK(is_null_text("  "));
  CHECK(is_null_text("na"));
  CHECK(is_null_text("NA"));
  CHECK(is_null_text(" NULL "));
  CHECK(is_null_text("Null"));
  CHECK(!is_null_text("0"));
  CHECK(!is_null_text("none"));
  CHECK(!is_null_text("nan"));
}

TEST_CASE("cell text rendering") {
  CHECK(cell_text(Cell{}) == "");
  CHECK(cell_text(Cell{std::int64_t{42}}) == "42");
  CHECK(cell_text(Cell{std::string("raw")}) == "raw");

  // Doubles use shortest round-trip form: text -> value -> text is lossless.
  for (double v : {2.5, 1.0 / 3.0, 1e20, -0.0625, 123456789.123456}) {
    const std::string text = cell_text(Cell{v});
    CHECK(parse_number(text) == v);
  }

  Timestamp t{1595808000};  // 2020-07-27T00:00:00Z
  CHECK(cell_text(Cell{t}) == "2020-07-27T00:00:00Z");
}

TEST_CASE("timestamp parsing round trips") {
  auto t = parse_iso8601("2020-07-27T13:05:00Z");
  REQUIRE(t);
  CHECK(to_iso8601(*t) == "2020-07-27T13:05:00Z");

  auto date_only = parse_temporal("2020/07/27", {TemporalFormat::ymd_slash});
  REQUIRE(date_only);
  CHECK(to_iso8601(*date_only) == "2020-07-27T00:00:00Z");

  auto mdy = parse_temporal("07/27/2020", {TemporalFormat::mdy_slash});
  REQUIRE(mdy);
  CHECK(*mdy == *date_only);

  CHECK(!parse_temporal("27/07/2020x", {TemporalFormat::mdy_slash}));
}

TEST_CASE("pairwise sum tracks a long double reference") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  std::vector<double> values(10000);
  long double naive = 0.0L;
  for (double& v : values) {
    v = dist(rng);
    naive += v;
  }
  const double got = pairwise_sum(values.data(), values.size());
  const double want = static_cast<double>(naive);
  CHECK(std::fabs(got - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
  CHECK(pairwise_sum(nullptr, 0) == 0.0);
}

TEST_CASE("token estimate is ceil of bytes over four") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
  CHECK(estimate_tokens(std::string(4000, 'x')) == 1000);
  CHECK(estimate_tokens("abcdef", 2) == 3);
}

TEST_CASE("nearest name suggestions are distance ordered") {
  std::vector<std::string> candidates = {"deaths", "New cases", "WHO Region"};
  auto near = nearest_names("newcases", candidates);
  REQUIRE(!near.empty());
  CHECK(near[0] == "New cases");
  CHECK(nearest_names("zzzzzz", candidates).empty());
  CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("first balanced object extraction tolerates prose") {
  auto obj = extract_first_object("Sure thing!\n```json\n{\"a\": {\"b\": 1}}\n```\ndone");
  REQUIRE(obj);
  CHECK((*obj)["a"]["b"] == 1);

  auto braces_in_strings = extract_first_object("{\"s\": \"closing } inside\"}");
  REQUIRE(braces_in_strings);
  CHECK((*braces_in_strings)["s"] == "closing } inside");

  CHECK(!extract_first_object("no json here"));
  CHECK(!extract_first_object("{\"unterminated\": 1"));
}
