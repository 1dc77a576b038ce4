#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attribforge/csv.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/matrix.hpp"

namespace attribforge {

enum class ColumnKind { categorical, numeric, automatic };
enum class ColumnRole { feature, rating_count, star_rating, drop };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::automatic;
  ColumnRole role = ColumnRole::feature;
};

using Schema = std::vector<ColumnSchema>;

struct PreprocessReport {
  std::size_t rows_in = 0;
  std::size_t rows_after_filter = 0;
  std::size_t rows_after_impute = 0;
  std::size_t rows_dropped_bad_count = 0;      // unparseable rating counts
  std::size_t rows_dropped_below_threshold = 0;
  std::size_t rows_dropped_missing_target = 0;
  // (column, reason) for columns reassigned to role=drop.
  std::vector<std::pair<std::string, std::string>> dropped_columns;
  // (column, imputed cell count), in header order, imputed columns only.
  std::vector<std::pair<std::string, std::size_t>> imputed_cells;
};

inline bool is_missing(std::string_view cell) { return trim_view(cell).empty(); }

// Aligns a declared schema with the table header: unlisted columns default
// to automatic feature columns, `automatic` resolves to numeric only when
// every present cell parses as a number. Exactly one rating_count and one
// star_rating column are required.
inline Schema resolve_schema(const RawTable& table, const Schema& declared) {
  for (const auto& entry : declared) {
    bool found = false;
    for (const auto& name : table.header) found |= (name == entry.name);
    if (!found)
      throw DataError("schema column '" + entry.name + "' not found in table");
  }
  Schema resolved;
  resolved.reserve(table.header.size());
  for (const auto& name : table.header) {
    ColumnSchema schema{name, ColumnKind::automatic, ColumnRole::feature};
    for (const auto& entry : declared)
      if (entry.name == name) schema = entry;
    resolved.push_back(schema);
  }

  std::size_t counts = 0, stars = 0;
  for (auto& entry : resolved) {
    if (entry.role == ColumnRole::rating_count) {
      entry.kind = ColumnKind::numeric;
      ++counts;
    } else if (entry.role == ColumnRole::star_rating) {
      entry.kind = ColumnKind::numeric;
      ++stars;
    }
  }
  if (counts != 1)
    throw DataError("schema must assign exactly one rating_count column, got " +
                    std::to_string(counts));
  if (stars != 1)
    throw DataError("schema must assign exactly one star_rating column, got " +
                    std::to_string(stars));

  for (std::size_t c = 0; c < resolved.size(); ++c) {
    if (resolved[c].kind != ColumnKind::automatic) continue;
    bool any_present = false;
    bool all_numeric = true;
    double ignored;
    for (const auto& row : table.rows) {
      if (is_missing(row[c])) continue;
      any_present = true;
      if (!parse_double(row[c], ignored)) {
        all_numeric = false;
        break;
      }
    }
    resolved[c].kind = (any_present && all_numeric) ? ColumnKind::numeric
                                                    : ColumnKind::categorical;
  }
  return resolved;
}

inline std::size_t find_role(const Schema& schema, ColumnRole role) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].role == role) return i;
  throw DataError("schema has no column with the requested role");
}

// Parses a rating count as a non-negative integer; tolerates a decimal
// point with zero fraction ("12.0").
inline bool parse_rating_count(std::string_view cell, long long& out) {
  double value;
  if (!parse_double(cell, value)) return false;
  if (!(value >= 0) || value != std::floor(value) || value > 9e15) return false;
  out = static_cast<long long>(value);
  return true;
}

// Keeps rows whose rating count is >= threshold; rows with unparseable
// counts are dropped and tallied. Row order is preserved.
inline RawTable filter_min_ratings(const RawTable& table, const Schema& schema,
                                   long long threshold,
                                   PreprocessReport* report = nullptr) {
  const std::size_t count_col = find_role(schema, ColumnRole::rating_count);
  RawTable out;
  out.header = table.header;
  for (const auto& row : table.rows) {
    long long count;
    if (!parse_rating_count(row[count_col], count)) {
      if (report) ++report->rows_dropped_bad_count;
      continue;
    }
    if (count >= threshold) {
      out.rows.push_back(row);
    } else if (report) {
      ++report->rows_dropped_below_threshold;
    }
  }
  if (report) report->rows_after_filter = out.rows.size();
  return out;
}

// Blends rating volume into the star score; approaches the star rating as
// the count grows and is zero for unrated products.
inline double mix_rating(long long rating_count, double star) {
  return (static_cast<double>(rating_count) * star) /
         (static_cast<double>(rating_count) + 1.0);
}

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

// Median/mode imputation. Rows missing either target column are dropped
// (fabricating labels is worse than losing rows). Feature columns with more
// than 40% missing cells are reassigned role=drop and reported.
inline RawTable impute_missing(const RawTable& table, Schema& schema,
                               PreprocessReport* report = nullptr) {
  const std::size_t count_col = find_role(schema, ColumnRole::rating_count);
  const std::size_t star_col = find_role(schema, ColumnRole::star_rating);

  RawTable out;
  out.header = table.header;
  double star_value;
  long long count_value;
  for (const auto& row : table.rows) {
    if (!parse_rating_count(row[count_col], count_value) ||
        !parse_double(row[star_col], star_value)) {
      if (report) ++report->rows_dropped_missing_target;
      continue;
    }
    out.rows.push_back(row);
  }

  const std::size_t m = out.rows.size();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].role != ColumnRole::feature) continue;
    const bool numeric = schema[c].kind == ColumnKind::numeric;

    // A numeric cell that fails to parse counts as missing.
    std::vector<std::size_t> gaps;
    std::vector<double> numbers;
    std::map<std::string, std::size_t> tallies;
    for (std::size_t r = 0; r < m; ++r) {
      const std::string& cell = out.rows[r][c];
      double value;
      if (is_missing(cell) || (numeric && !parse_double(cell, value))) {
        gaps.push_back(r);
      } else if (numeric) {
        numbers.push_back(value);
      } else {
        ++tallies[trim(cell)];
      }
    }

    if (m > 0 && gaps.size() * 5 > m * 2) {  // strictly more than 40% missing
      schema[c].role = ColumnRole::drop;
      if (report)
        report->dropped_columns.emplace_back(
            schema[c].name, "missing in " + std::to_string(gaps.size()) +
                                " of " + std::to_string(m) + " rows");
      continue;
    }
    if (gaps.empty()) continue;

    std::string fill;
    if (numeric) {
      fill = format_double(median_of(numbers));
    } else {
      // Mode; ties go to the lexicographically smallest category. The map
      // is ordered, so the first maximal tally wins.
      std::size_t best = 0;
      for (const auto& [category, tally] : tallies) {
        if (tally > best) {
          best = tally;
          fill = category;
        }
      }
    }
    for (const std::size_t r : gaps) out.rows[r][c] = fill;
    if (report) report->imputed_cells.emplace_back(schema[c].name, gaps.size());
  }
  if (report) report->rows_after_impute = out.rows.size();
  return out;
}

// Ordered category list; encoding is a bijection with {0..c-1}.
struct CategoryEncoder {
  std::string feature;
  std::vector<std::string> categories;  // lexicographically sorted

  std::size_t encode(std::string_view value) const {
    const std::string needle = trim(value);
    const auto it =
        std::lower_bound(categories.begin(), categories.end(), needle);
    if (it == categories.end() || *it != needle)
      throw DataError("feature '" + feature + "': unseen category '" + needle +
                      "'");
    return static_cast<std::size_t>(it - categories.begin());
  }

  const std::string& decode(std::size_t code) const {
    if (code >= categories.size())
      throw DataError("feature '" + feature + "': code out of range");
    return categories[code];
  }
};

// Fully numeric view of the table. X holds min-max scaled values in [0,1];
// X_pre holds the pre-scaling values (ordinal codes or raw numerics) so a
// strict per-fold scaling mode can refit the scalers on training folds.
struct EncodedDataset {
  std::vector<std::string> feature_names;
  std::vector<ColumnKind> feature_kinds;
  Matrix X;
  Matrix X_pre;
  std::vector<double> y;
  std::vector<CategoryEncoder> encoders;               // empty for numerics
  std::vector<std::pair<double, double>> scalers;      // (min, max) of X_pre
  std::vector<std::vector<std::string>> raw_values;    // m x d, post-impute

  std::size_t rows() const { return X.rows(); }
  std::size_t features() const { return X.cols(); }
};

inline double min_max_scale(double value, double lo, double hi) {
  return hi > lo ? (value - lo) / (hi - lo) : 0.0;  // constant columns map to 0
}

// Ordinal-encodes categoricals (lexicographic order), min-max scales
// everything into [0,1], and derives the mix-rating target. The table must
// already be filtered and imputed.
inline EncodedDataset encode_and_scale(const RawTable& table, const Schema& schema) {
  const std::size_t count_col = find_role(schema, ColumnRole::rating_count);
  const std::size_t star_col = find_role(schema, ColumnRole::star_rating);
  const std::size_t m = table.rows.size();

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (schema[c].role == ColumnRole::feature) feature_cols.push_back(c);
  const std::size_t d = feature_cols.size();

  EncodedDataset out;
  out.feature_names.reserve(d);
  out.feature_kinds.reserve(d);
  out.X = Matrix(m, d);
  out.X_pre = Matrix(m, d);
  out.encoders.resize(d);
  out.scalers.resize(d);
  out.raw_values.assign(m, std::vector<std::string>(d));

  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t c = feature_cols[j];
    out.feature_names.push_back(schema[c].name);
    out.feature_kinds.push_back(schema[c].kind);

    if (schema[c].kind == ColumnKind::categorical) {
      std::vector<std::string> categories;
      for (const auto& row : table.rows) categories.push_back(trim(row[c]));
      std::sort(categories.begin(), categories.end());
      categories.erase(std::unique(categories.begin(), categories.end()),
                       categories.end());
      out.encoders[j] = CategoryEncoder{schema[c].name, categories};
      const double hi = static_cast<double>(categories.size()) - 1.0;
      out.scalers[j] = {0.0, hi};
      for (std::size_t r = 0; r < m; ++r) {
        const auto code =
            static_cast<double>(out.encoders[j].encode(table.rows[r][c]));
        out.X_pre(r, j) = code;
        out.X(r, j) = min_max_scale(code, 0.0, hi);
        out.raw_values[r][j] = trim(table.rows[r][c]);
      }
    } else {
      double lo = 0.0, hi = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        double value;
        if (!parse_double(table.rows[r][c], value))
          throw DataError("feature '" + schema[c].name +
                          "': non-numeric cell after imputation: '" +
                          table.rows[r][c] + "'");
        out.X_pre(r, j) = value;
        if (r == 0 || value < lo) lo = value;
        if (r == 0 || value > hi) hi = value;
      }
      out.scalers[j] = {lo, hi};
      for (std::size_t r = 0; r < m; ++r) {
        out.X(r, j) = min_max_scale(out.X_pre(r, j), lo, hi);
        out.raw_values[r][j] = trim(table.rows[r][c]);
      }
    }
  }

  out.y.reserve(m);
  for (const auto& row : table.rows) {
    long long count;
    double star;
    if (!parse_rating_count(row[count_col], count) ||
        !parse_double(row[star_col], star))
      throw DataError("unparseable rating columns; run filtering and imputation first");
    out.y.push_back(mix_rating(count, star));
  }
  return out;
}

// Descriptive statistics for the ingest summary. Numeric dispersion is the
// coefficient of variation; categorical dispersion is Shannon entropy (nats).
struct ColumnStats {
  std::string name;
  bool numeric = false;
  std::string mode;
  double mean = 0.0, median = 0.0, min = 0.0, max = 0.0, dispersion = 0.0;
  std::size_t distinct = 0;
};

inline ColumnStats numeric_stats(const std::string& name,
                                 const std::vector<double>& values) {
  ColumnStats stats;
  stats.name = name;
  stats.numeric = true;
  const std::size_t n = values.size();
  if (n == 0) return stats;
  double sum = 0.0;
  for (const double v : values) sum += v;
  stats.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : values) ss += (v - stats.mean) * (v - stats.mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  stats.dispersion = stats.mean != 0.0 ? sd / std::abs(stats.mean) : sd;
  stats.median = median_of(values);
  stats.min = *std::min_element(values.begin(), values.end());
  stats.max = *std::max_element(values.begin(), values.end());
  std::map<double, std::size_t> tallies;
  for (const double v : values) ++tallies[v];
  stats.distinct = tallies.size();
  std::size_t best = 0;
  for (const auto& [value, tally] : tallies)
    if (tally > best) {
      best = tally;
      stats.mode = format_double(value);
    }
  return stats;
}

inline ColumnStats categorical_stats(const std::string& name,
                                     const std::vector<std::string>& values) {
  ColumnStats stats;
  stats.name = name;
  const std::size_t n = values.size();
  std::map<std::string, std::size_t> tallies;
  for (const auto& v : values) ++tallies[v];
  stats.distinct = tallies.size();
  std::size_t best = 0;
  double entropy = 0.0;
  for (const auto& [value, tally] : tallies) {
    const double p = static_cast<double>(tally) / static_cast<double>(n);
    entropy -= p * std::log(p);
    if (tally > best) {
      best = tally;
      stats.mode = value;
    }
  }
  stats.dispersion = entropy;
  return stats;
}

}  // namespace attribforge
