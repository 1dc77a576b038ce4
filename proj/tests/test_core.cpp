#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <set>

#include "attribforge/csv.hpp"
#include "attribforge/matrix.hpp"
#include "attribforge/parallel.hpp"
#include "attribforge/rng.hpp"

using namespace attribforge;

TEST_CASE("rng is deterministic and bounded") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.below(13) < 13);
  }
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t i = 0; i < 50; ++i) seeds.insert(derive_seed(42, s, i));
  REQUIRE(seeds.size() == 2500);
}

TEST_CASE("rng normal has sane moments") {
  Rng r(99);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  REQUIRE(std::abs(sum / n) < 0.01);
  REQUIRE(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("matrix selection") {
  Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const Matrix cols = m.select_columns({2, 0});
  REQUIRE(cols(1, 0) == 6.0);
  REQUIRE(cols(1, 1) == 4.0);
  const Matrix rows = m.select_rows({2});
  REQUIRE(rows.rows() == 1);
  REQUIRE(rows(0, 1) == 8.0);
}

TEST_CASE("csv parses a plain table") {
  const RawTable t = parse_csv("a,b\n1,x\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 1);
  REQUIRE(t.rows[0] == std::vector<std::string>{"1", "x"});
}

TEST_CASE("csv handles quoting") {
  const RawTable t =
      parse_csv("name,desc\n\"Smith, John\",\"says \"\"hi\"\"\"\nplain,\"two\nlines\"\n");
  REQUIRE(t.rows[0][0] == "Smith, John");
  REQUIRE(t.rows[0][1] == "says \"hi\"");
  REQUIRE(t.rows[1][1] == "two\nlines");
}

TEST_CASE("csv rejects degenerate input") {
  REQUIRE_THROWS_WITH(parse_csv(""), Catch::Matchers::ContainsSubstring("missing header"));
  REQUIRE_THROWS_WITH(parse_csv("a,b\n1\n"), Catch::Matchers::ContainsSubstring("row 1"));
  REQUIRE_THROWS_AS(parse_csv("a,a\n1,2\n"), DataError);
  REQUIRE_THROWS_AS(parse_csv("a,b\n\"unterminated\n"), DataError);
}

TEST_CASE("csv escape round-trips random tables") {
  Rng rng(2024);
  const std::string alphabet = "ab,\"\n x";
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<std::string>> rows(1 + rng.below(4));
    const std::size_t cols = 1 + rng.below(4);
    std::string text;
    for (std::size_t c = 0; c < cols; ++c)
      text += (c ? "," : "") + std::string("col") + std::to_string(c);
    text += "\n";
    for (auto& row : rows) {
      row.resize(cols);
      for (std::size_t c = 0; c < cols; ++c) {
        std::string cell;
        const std::size_t len = rng.below(6);
        for (std::size_t i = 0; i < len; ++i)
          cell.push_back(alphabet[rng.below(alphabet.size())]);
        if (cell.empty()) cell = "v";  // blank-line ambiguity is out of scope
        row[c] = cell;
        text += (c ? "," : "") + csv_field(cell);
      }
      text += "\n";
    }
    const RawTable parsed = parse_csv(text);
    REQUIRE(parsed.rows == rows);
  }
}

TEST_CASE("parse_double accepts full numbers only") {
  double v;
  REQUIRE(parse_double("12.5", v));
  REQUIRE(v == 12.5);
  REQUIRE(parse_double(" 7 ", v));
  REQUIRE(parse_double("+3", v));
  REQUIRE_FALSE(parse_double("', v", v));
  REQUIRE_FALSE(parse_double("12x", v));
  REQUIRE_FALSE(parse_double("", v));
}

TEST_CASE("format_double is shortest round-trip") {
  REQUIRE(format_double(64.0) == "64");
  REQUIRE(format_double(0.1) == "0.1");
  double v;
  REQUIRE(parse_double(format_double(4.79251), v));
  REQUIRE(v == 4.79251);
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) REQUIRE(h.load() == 1);
}

TEST_CASE("parallel_for propagates worker exceptions") {
  REQUIRE_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                   if (i == 57) throw DataError("boom");
                                 }),
                    DataError);
}
