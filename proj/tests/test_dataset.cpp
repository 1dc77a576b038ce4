#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "attribforge/dataset.hpp"
#include "attribforge/rng.hpp"

using namespace attribforge;

namespace {

Schema laptop_schema() {
  return {{"Ratings", ColumnKind::numeric, ColumnRole::rating_count},
          {"Stars", ColumnKind::numeric, ColumnRole::star_rating}};
}

RawTable table_from(const std::string& csv) { return parse_csv(csv); }

}  // namespace

TEST_CASE("mix_rating formula") {
  REQUIRE(mix_rating(0, 4.5) == 0.0);
  REQUIRE(mix_rating(10, 4.4) == Catch::Approx(4.0).margin(1e-12));  // 44/11
  REQUIRE(std::abs(mix_rating(1000000, 4.2) - 4.2) < 1e-5);
}

TEST_CASE("mix_rating is below the star rating and monotone in count") {
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const long long n = static_cast<long long>(rng.below(100000));
    const double star = rng.uniform(1.0, 5.0);
    REQUIRE(mix_rating(n, star) < star);
    REQUIRE(mix_rating(n, star) <= mix_rating(n + 1, star));
    REQUIRE(mix_rating(n, star) >= 0.0);
  }
}

TEST_CASE("filter_min_ratings keeps the boundary and preserves order") {
  const RawTable t = table_from("Ratings,Stars\n5,4\n10,4\n300,4\n");
  Schema schema = resolve_schema(t, laptop_schema());
  PreprocessReport report;
  const RawTable kept = filter_min_ratings(t, schema, 10, &report);
  REQUIRE(kept.rows.size() == 2);
  REQUIRE(kept.rows[0][0] == "10");
  REQUIRE(kept.rows[1][0] == "300");
  REQUIRE(report.rows_dropped_below_threshold == 1);

  const RawTable all = filter_min_ratings(t, schema, 0);
  REQUIRE(all.rows.size() == 3);
}

TEST_CASE("filter_min_ratings drops unparseable counts") {
  const RawTable t = table_from("Ratings,Stars\nmany,4\n12,4\n-3,4\n2.5,4\n");
  Schema schema = resolve_schema(t, laptop_schema());
  PreprocessReport report;
  const RawTable kept = filter_min_ratings(t, schema, 0, &report);
  REQUIRE(kept.rows.size() == 1);
  REQUIRE(report.rows_dropped_bad_count == 3);
}

TEST_CASE("filter requires a rating_count column") {
  const RawTable t = table_from("a,b\n1,2\n");
  Schema schema = {{"a", ColumnKind::numeric, ColumnRole::feature}};
  REQUIRE_THROWS_AS(filter_min_ratings(t, schema, 10), DataError);
}

TEST_CASE("impute_missing fills medians and modes") {
  const RawTable t = table_from(
      "Ratings,Stars,num,cat\n"
      "10,4,1,a\n"
      "10,4,,\n"
      "10,4,3,a\n"
      "10,4,2,b\n");
  Schema schema = resolve_schema(t, laptop_schema());
  PreprocessReport report;
  const RawTable filled = impute_missing(t, schema, &report);
  REQUIRE(filled.rows[1][2] == "2");  // median of {1,3,2}
  REQUIRE(filled.rows[1][3] == "a");  // mode
  REQUIRE(report.imputed_cells.size() == 2);
}

TEST_CASE("categorical mode ties break to the smallest category") {
  const RawTable t = table_from(
      "Ratings,Stars,cat\n10,4,b\n10,4,a\n10,4,\n10,4,a\n10,4,b\n");
  Schema schema = resolve_schema(t, laptop_schema());
  const RawTable filled = impute_missing(t, schema);
  REQUIRE(filled.rows[2][2] == "a");
}

TEST_CASE("columns above 40 percent missing are dropped and reported") {
  const RawTable t = table_from(
      "Ratings,Stars,half\n10,4,1\n10,4,\n10,4,3\n10,4,\n");
  Schema schema = resolve_schema(t, laptop_schema());
  PreprocessReport report;
  impute_missing(t, schema, &report);
  REQUIRE(report.dropped_columns.size() == 1);
  REQUIRE(report.dropped_columns[0].first == "half");
  REQUIRE(schema[2].role == ColumnRole::drop);
}

TEST_CASE("rows missing a target cell are dropped, not imputed") {
  const RawTable t = table_from(
      "Ratings,Stars,x\n10,4,1\n,4,2\n10,,3\n10,4,4\n");
  Schema schema = resolve_schema(t, laptop_schema());
  PreprocessReport report;
  const RawTable filled = impute_missing(t, schema, &report);
  REQUIRE(filled.rows.size() == 2);
  REQUIRE(report.rows_dropped_missing_target == 2);
}

TEST_CASE("filter and impute commute when counts are clean") {
  const std::string csv =
      "Ratings,Stars,num,cat\n"
      "5,4.1,1,a\n12,4.2,,b\n30,4.3,3,\n9,3.9,4,c\n15,4.0,5,c\n";
  const RawTable t = table_from(csv);
  Schema schema_a = resolve_schema(t, laptop_schema());
  Schema schema_b = schema_a;
  const RawTable filter_then_impute =
      impute_missing(filter_min_ratings(t, schema_a, 10), schema_a);
  const RawTable impute_then_filter =
      filter_min_ratings(impute_missing(t, schema_b), schema_b, 10);
  REQUIRE(filter_then_impute.rows == impute_then_filter.rows);
}

TEST_CASE("encode_and_scale ordinal-encodes lexicographically") {
  const RawTable t = table_from(
      "Ratings,Stars,Brand\n10,4,HP\n10,4,ASUS\n10,4,DELL\n");
  Schema schema = resolve_schema(t, laptop_schema());
  const EncodedDataset data = encode_and_scale(t, schema);
  REQUIRE(data.feature_names == std::vector<std::string>{"Brand"});
  REQUIRE(data.encoders[0].categories ==
          std::vector<std::string>{"ASUS", "DELL", "HP"});
  REQUIRE(data.X(0, 0) == 1.0);
  REQUIRE(data.X(1, 0) == 0.0);
  REQUIRE(data.X(2, 0) == 0.5);
}

TEST_CASE("numeric scaling and constant columns") {
  const RawTable t = table_from(
      "Ratings,Stars,Price,Const\n10,4,19990,64\n10,4,441990,64\n");
  Schema schema = resolve_schema(t, laptop_schema());
  const EncodedDataset data = encode_and_scale(t, schema);
  REQUIRE(data.X(0, 0) == 0.0);
  REQUIRE(data.X(1, 0) == 1.0);
  REQUIRE(data.X(0, 1) == 0.0);
  REQUIRE(data.X(1, 1) == 0.0);
  REQUIRE(data.scalers[0] == std::pair<double, double>{19990.0, 441990.0});
}

TEST_CASE("targets equal mix_rating exactly") {
  const RawTable t = table_from("Ratings,Stars,x\n10,4.4,1\n3,5,2\n");
  Schema schema = resolve_schema(t, laptop_schema());
  const EncodedDataset data = encode_and_scale(t, schema);
  REQUIRE(data.y[0] == mix_rating(10, 4.4));
  REQUIRE(data.y[1] == mix_rating(3, 5.0));
}

TEST_CASE("unseen categories are named in the error") {
  CategoryEncoder encoder{"Brand", {"ASUS", "HP"}};
  REQUIRE(encoder.encode("HP") == 1);
  REQUIRE_THROWS_WITH(encoder.encode("Foo"),
                      Catch::Matchers::ContainsSubstring("Brand") &&
                          Catch::Matchers::ContainsSubstring("Foo"));
}

TEST_CASE("encoding round-trips and stays inside the unit interval") {
  Rng rng(77);
  const char* brands[] = {"alpha", "beta", "gamma", "delta"};
  std::string csv = "Ratings,Stars,brand,price,flag\n";
  for (int i = 0; i < 60; ++i) {
    csv += std::to_string(10 + rng.below(50)) + "," +
           format_double(rng.uniform(1.0, 5.0)) + "," +
           brands[rng.below(4)] + "," + format_double(rng.uniform(100, 900)) +
           "," + (rng.below(2) ? "yes" : "no") + "\n";
  }
  const RawTable t = table_from(csv);
  Schema schema = resolve_schema(t, laptop_schema());
  const EncodedDataset data = encode_and_scale(t, schema);
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < data.features(); ++c) {
      REQUIRE(data.X(r, c) >= 0.0);
      REQUIRE(data.X(r, c) <= 1.0);
      if (data.feature_kinds[c] == ColumnKind::categorical) {
        const auto code = static_cast<std::size_t>(data.X_pre(r, c));
        REQUIRE(data.encoders[c].decode(code) == data.raw_values[r][c]);
      }
    }
}

TEST_CASE("auto kind resolves numeric-looking columns only") {
  const RawTable t = table_from(
      "Ratings,Stars,Weight,Size\n10,4,Casual,15.6\n10,4,Gaming,14\n");
  const Schema schema = resolve_schema(t, laptop_schema());
  REQUIRE(schema[2].kind == ColumnKind::categorical);
  REQUIRE(schema[3].kind == ColumnKind::numeric);
}

TEST_CASE("resolve_schema validates target columns") {
  const RawTable t = table_from("a,b\n1,2\n");
  REQUIRE_THROWS_AS(resolve_schema(t, {}), DataError);
  REQUIRE_THROWS_AS(
      resolve_schema(t, {{"missing", ColumnKind::numeric, ColumnRole::rating_count}}),
      DataError);
}
