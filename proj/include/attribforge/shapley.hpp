#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "attribforge/dataset.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/matrix.hpp"
#include "attribforge/model.hpp"
#include "attribforge/parallel.hpp"
#include "attribforge/rng.hpp"

namespace attribforge {

// Reference rows that stand in for "missing" features when a coalition
// excludes them.
struct BackgroundSet {
  Matrix rows;
  std::size_t size() const { return rows.rows(); }
};

inline constexpr std::uint64_t kBackgroundStream = 0x6267ULL;  // "bg"
inline constexpr std::uint64_t kShapStream = 0x73686170ULL;    // "shap"

inline BackgroundSet sample_background(const Matrix& X, std::size_t max_rows,
                                       std::uint64_t seed) {
  if (X.rows() == 0) throw DataError("sample_background: empty matrix");
  if (X.rows() <= max_rows) return {X};
  std::vector<std::size_t> order(X.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kBackgroundStream));
  rng.shuffle(order);
  order.resize(max_rows);
  std::sort(order.begin(), order.end());
  return {X.select_rows(order)};
}

// Coalition value: mean prediction over composite rows that take x's value
// for features in S and the background row's value elsewhere. The full
// coalition short-circuits to f(x) with no background substitution.
inline double value_function(const TrainedModel& model,
                             std::span<const double> x,
                             const std::vector<std::uint8_t>& subset,
                             const BackgroundSet& background) {
  const std::size_t d = x.size();
  if (subset.size() != d)
    throw DataError("value_function: subset length does not match features");
  bool full = true;
  for (const auto bit : subset) full &= bit != 0;
  if (full) return model.predict_row(x);

  const std::size_t b = background.size();
  Matrix composites(b, d);
  for (std::size_t r = 0; r < b; ++r) {
    const auto ref = background.rows.row(r);
    for (std::size_t j = 0; j < d; ++j)
      composites(r, j) = subset[j] ? x[j] : ref[j];
  }
  const std::vector<double> predictions = model.predict(composites);
  double sum = 0.0;
  for (const double p : predictions) sum += p;
  return sum / static_cast<double>(b);
}

// Exact Shapley values by enumerating all 2^d coalitions:
//
//   phi_i = sum over S not containing i of
//           |S|! (d - |S| - 1)! / d!  *  [v(S + i) - v(S)]
//
// Efficiency, symmetry and dummy hold by construction; the suite asserts
// them rather than trusting this comment.
inline std::vector<double> exact_shapley(const TrainedModel& model,
                                         std::span<const double> x,
                                         const BackgroundSet& background,
                                         std::size_t exact_cap = 15) {
  const std::size_t d = x.size();
  if (d > exact_cap)
    throw DataError("exact_shapley: " + std::to_string(d) +
                    " features exceed the exact-mode cap of " +
                    std::to_string(exact_cap) + "; use sampled_shapley");

  // w[s] = s! (d-1-s)! / d!, exact in double for d <= 15.
  std::vector<double> factorial(d + 1, 1.0);
  for (std::size_t i = 1; i <= d; ++i)
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  std::vector<double> weight(d);
  for (std::size_t s = 0; s < d; ++s)
    weight[s] = factorial[s] * factorial[d - 1 - s] / factorial[d];

  const std::size_t coalitions = std::size_t{1} << d;
  std::vector<double> value(coalitions);
  std::vector<std::uint8_t> subset(d);
  for (std::size_t bits = 0; bits < coalitions; ++bits) {
    for (std::size_t j = 0; j < d; ++j) subset[j] = (bits >> j) & 1;
    value[bits] = value_function(model, x, subset, background);
  }

  std::vector<double> phi(d, 0.0);
  for (std::size_t bits = 0; bits < coalitions; ++bits) {
    const auto size = static_cast<std::size_t>(std::popcount(bits));
    for (std::size_t i = 0; i < d; ++i) {
      if (bits & (std::size_t{1} << i)) continue;
      phi[i] += weight[size] * (value[bits | (std::size_t{1} << i)] - value[bits]);
    }
  }
  return phi;
}

// Permutation-sampling estimator of the same quantity, for d beyond the
// exact cap. Each sampled ordering adds features one at a time and credits
// every feature its value gain; the mean over orderings is unbiased.
inline std::vector<double> sampled_shapley(const TrainedModel& model,
                                           std::span<const double> x,
                                           const BackgroundSet& background,
                                           std::size_t permutations, Rng& rng) {
  if (permutations < 1)
    throw DataError("sampled_shapley: need at least one permutation");
  const std::size_t d = x.size();
  const std::size_t b = background.size();

  std::vector<double> phi(d, 0.0);
  std::vector<std::size_t> order(d);
  Matrix composites = background.rows;
  for (std::size_t p = 0; p < permutations; ++p) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t j = 0; j < d; ++j)
        composites(r, j) = background.rows(r, j);

    const std::vector<double> base_pred = model.predict(composites);
    double previous = 0.0;
    for (const double v : base_pred) previous += v;
    previous /= static_cast<double>(b);

    for (const std::size_t feature : order) {
      for (std::size_t r = 0; r < b; ++r) composites(r, feature) = x[feature];
      const std::vector<double> predictions = model.predict(composites);
      double current = 0.0;
      for (const double v : predictions) current += v;
      current /= static_cast<double>(b);
      phi[feature] += current - previous;
      previous = current;
    }
  }
  for (double& v : phi) v /= static_cast<double>(permutations);
  return phi;
}

enum class ShapMode { automatic, exact, sampled };

struct ShapOptions {
  ShapMode mode = ShapMode::automatic;
  std::size_t exact_cap = 15;
  std::size_t permutations = 2048;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Per-instance, per-feature attributions. In exact mode every row satisfies
// base_value + sum(values[i]) = f(x_i) up to float error.
struct ShapMatrix {
  Matrix values;
  double base_value = 0.0;
  std::vector<std::string> feature_names;
};

inline ShapMatrix shap_matrix(const TrainedModel& model, const Matrix& X,
                              const BackgroundSet& background,
                              const std::vector<std::string>& feature_names,
                              const ShapOptions& options = {}) {
  const std::size_t d = X.cols();
  if (model.feature_count() != d)
    throw DataError("shap_matrix: model and matrix feature counts differ");
  bool exact = options.mode != ShapMode::sampled;
  if (options.mode == ShapMode::automatic) exact = d <= options.exact_cap;

  ShapMatrix out;
  out.feature_names = feature_names;
  out.values = Matrix(X.rows(), d);
  const std::vector<double> base_preds = model.predict(background.rows);
  double base = 0.0;
  for (const double v : base_preds) base += v;
  out.base_value = base / static_cast<double>(background.size());

  parallel_for(X.rows(), options.threads, [&](std::size_t r) {
    std::vector<double> phi;
    if (exact) {
      phi = exact_shapley(model, X.row(r), background, options.exact_cap);
    } else {
      Rng rng(derive_seed(options.seed, kShapStream, r));
      phi = sampled_shapley(model, X.row(r), background, options.permutations, rng);
    }
    for (std::size_t j = 0; j < d; ++j) out.values(r, j) = phi[j];
  });
  return out;
}

struct RankedFeature {
  std::size_t index = 0;
  std::string name;
  double mean_abs_shap = 0.0;
};

// Features by mean |phi| descending; ties keep ascending feature order.
inline std::vector<RankedFeature> rank_features(const ShapMatrix& shap) {
  const std::size_t m = shap.values.rows();
  const std::size_t d = shap.values.cols();
  if (m == 0) throw DataError("rank_features: empty matrix");
  std::vector<RankedFeature> ranked(d);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += std::abs(shap.values(i, j));
    ranked[j] = {j, shap.feature_names[j], sum / static_cast<double>(m)};
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedFeature& a, const RankedFeature& b) {
              if (a.mean_abs_shap != b.mean_abs_shap)
                return a.mean_abs_shap > b.mean_abs_shap;
              return a.index < b.index;
            });
  return ranked;
}

struct SpecImportanceEntry {
  std::string value;  // raw attribute value, or a bin label for wide numerics
  double mean_shap = 0.0;
  std::size_t support = 0;
};

struct SpecImportanceFeature {
  std::string feature;
  bool binned = false;
  std::vector<SpecImportanceEntry> entries;
};

struct SpecImportanceTable {
  std::vector<SpecImportanceFeature> features;
};

// Mean Shapley value per (feature, raw attribute value): the per-spec view.
// Numeric features with more than 30 distinct values fall back to decile
// bins; either way the entries partition the rows, so per-feature supports
// sum to m and support-weighted means recover the column sum.
inline SpecImportanceTable spec_importance(
    const ShapMatrix& shap, const std::vector<std::vector<std::string>>& raw_values,
    const std::vector<ColumnKind>& kinds) {
  const std::size_t m = shap.values.rows();
  const std::size_t d = shap.values.cols();
  if (raw_values.size() != m)
    throw DataError("spec_importance: raw values row count mismatch");

  SpecImportanceTable table;
  for (std::size_t j = 0; j < d; ++j) {
    SpecImportanceFeature feature;
    feature.feature = shap.feature_names[j];

    const bool numeric = kinds[j] == ColumnKind::numeric;
    std::vector<double> parsed(m, 0.0);
    std::size_t distinct = 0;
    if (numeric) {
      std::map<double, std::size_t> values;
      for (std::size_t i = 0; i < m; ++i) {
        if (!parse_double(raw_values[i][j], parsed[i]))
          throw DataError("spec_importance: non-numeric raw value '" +
                          raw_values[i][j] + "' in feature '" + feature.feature +
                          "'");
        ++values[parsed[i]];
      }
      distinct = values.size();
    }

    if (numeric && distinct > 30) {
      feature.binned = true;
      std::vector<double> sorted = parsed;
      std::sort(sorted.begin(), sorted.end());
      // Decile edges; duplicate edges collapse so bins stay disjoint.
      std::vector<double> edges;
      for (std::size_t q = 1; q < 10; ++q) {
        const double edge = sorted[q * m / 10];
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
      }
      const auto bin_of = [&](double v) {
        std::size_t bin = 0;
        while (bin < edges.size() && v >= edges[bin]) ++bin;
        return bin;
      };
      const std::size_t bins = edges.size() + 1;
      std::vector<double> sums(bins, 0.0);
      std::vector<std::size_t> supports(bins, 0);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bin = bin_of(parsed[i]);
        sums[bin] += shap.values(i, j);
        ++supports[bin];
      }
      for (std::size_t bin = 0; bin < bins; ++bin) {
        if (supports[bin] == 0) continue;
        const std::string lo = bin == 0 ? format_double(sorted.front())
                                        : format_double(edges[bin - 1]);
        const std::string hi = bin == edges.size() ? format_double(sorted.back())
                                                   : format_double(edges[bin]);
        feature.entries.push_back(
            {"[" + lo + ", " + hi + (bin == edges.size() ? "]" : ")"),
             sums[bin] / static_cast<double>(supports[bin]), supports[bin]});
      }
    } else if (numeric) {
      std::map<double, std::pair<double, std::size_t>> groups;
      for (std::size_t i = 0; i < m; ++i) {
        auto& [sum, support] = groups[parsed[i]];
        sum += shap.values(i, j);
        ++support;
      }
      for (const auto& [value, group] : groups)
        feature.entries.push_back({format_double(value),
                                   group.first / static_cast<double>(group.second),
                                   group.second});
    } else {
      std::map<std::string, std::pair<double, std::size_t>> groups;
      for (std::size_t i = 0; i < m; ++i) {
        auto& [sum, support] = groups[raw_values[i][j]];
        sum += shap.values(i, j);
        ++support;
      }
      for (const auto& [value, group] : groups)
        feature.entries.push_back({value,
                                   group.first / static_cast<double>(group.second),
                                   group.second});
    }
    table.features.push_back(std::move(feature));
  }
  return table;
}

// Beeswarm plot data: one point per (row, feature) with the scaled feature
// value as the color axis. Features appear in rank_features order. Writes a
// CSV and a small self-contained SVG.
inline void beeswarm_export(const ShapMatrix& shap, const Matrix& scaled_values,
                            const std::filesystem::path& csv_path,
                            const std::filesystem::path& svg_path) {
  const std::size_t m = shap.values.rows();
  const std::size_t d = shap.values.cols();
  const std::vector<RankedFeature> ranked = rank_features(shap);

  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw DataError("cannot write " + csv_path.string());
    csv << "feature,row,shap_value,scaled_value\n";
    for (const auto& feature : ranked)
      for (std::size_t i = 0; i < m; ++i)
        csv << csv_field(feature.name) << "," << i << ","
            << format_double(shap.values(i, feature.index)) << ","
            << format_double(scaled_values(i, feature.index)) << "\n";
  }

  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      lo = std::min(lo, shap.values(i, j));
      hi = std::max(hi, shap.values(i, j));
    }
  if (!(hi > lo)) hi = lo + 1.0;

  const double band = 28.0;
  const double left = 180.0, width = 560.0;
  const double height = band * static_cast<double>(d) + 50.0;
  const auto x_of = [&](double v) { return left + (v - lo) / (hi - lo) * width; };

  std::ofstream svg(svg_path, std::ios::binary);
  if (!svg) throw DataError("cannot write " + svg_path.string());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 40
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  svg << "<line x1=\"" << x_of(0.0) << "\" y1=\"10\" x2=\"" << x_of(0.0)
      << "\" y2=\"" << height - 30 << "\" stroke=\"#999\"/>\n";
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    const auto& feature = ranked[rank];
    const double y0 = 20.0 + band * static_cast<double>(rank);
    svg << "<text x=\"8\" y=\"" << y0 + band / 2.0
        << "\" font-size=\"12\">" << feature.name << "</text>\n";
    for (std::size_t i = 0; i < m; ++i) {
      const double value = shap.values(i, feature.index);
      const double tone = std::clamp(scaled_values(i, feature.index), 0.0, 1.0);
      const int red = static_cast<int>(tone * 255.0);
      const int blue = 255 - red;
      // Deterministic vertical jitter spreads overlapping points.
      std::uint64_t h = derive_seed(i, 0x6a697474ULL, feature.index);
      const double jitter =
          (static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5) * band * 0.7;
      svg << "<circle cx=\"" << x_of(value) << "\" cy=\""
          << y0 + band / 2.0 + jitter << "\" r=\"2\" fill=\"rgb(" << red
          << ",80," << blue << ")\" fill-opacity=\"0.7\"/>\n";
    }
  }
  svg << "<text x=\"" << left + width / 2.0 << "\" y=\"" << height - 10
      << "\" font-size=\"12\" text-anchor=\"middle\">contribution to prediction</text>\n";
  svg << "</svg>\n";
}

}  // namespace attribforge
