#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "attribforge/errors.hpp"
#include "attribforge/matrix.hpp"
#include "attribforge/rng.hpp"

namespace attribforge {

struct TreeParams {
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 5;
};

// CART regression tree with variance-reduction splits. All ties (between
// features and between thresholds) resolve to the first candidate in
// ascending feature order, which keeps fits bit-reproducible.
class DecisionTreeModel {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };

  static DecisionTreeModel fit(const Matrix& X, std::span<const double> y,
                               const TreeParams& params) {
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return fit_subset(X, y, params, rows, X.cols(), nullptr);
  }

  // Forest hook: restricts training to `rows` (with repetition allowed for
  // bootstrap samples) and considers `mtry` features per split. When
  // mtry == d the feature set is not sampled and `rng` is untouched, so a
  // one-tree forest without bootstrap matches a plain tree bit-for-bit.
  static DecisionTreeModel fit_subset(const Matrix& X, std::span<const double> y,
                                      const TreeParams& params,
                                      const std::vector<std::size_t>& rows,
                                      std::size_t mtry, Rng* rng) {
    if (params.min_samples_leaf < 1)
      throw DataError("dtree: min_samples_leaf must be at least 1");
    if (params.max_depth < 1) throw DataError("dtree: max_depth must be at least 1");
    DecisionTreeModel model;
    model.d_ = X.cols();
    Builder builder{X, y, params, mtry, rng, model.nodes_};
    builder.build(rows, 0);
    return model;
  }

  double predict_row(std::span<const double> q) const {
    int at = 0;
    for (;;) {
      const Node& node = nodes_[static_cast<std::size_t>(at)];
      if (node.feature < 0) return node.value;
      at = q[static_cast<std::size_t>(node.feature)] <= node.threshold
               ? node.left
               : node.right;
    }
  }

  std::size_t feature_count() const { return d_; }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  struct Builder {
    const Matrix& X;
    std::span<const double> y;
    const TreeParams& params;
    std::size_t mtry;
    Rng* rng;
    std::vector<Node>& nodes;

    int build(const std::vector<std::size_t>& rows, std::size_t depth) {
      const int id = static_cast<int>(nodes.size());
      nodes.push_back(Node{});

      const std::size_t n = rows.size();
      double sum = 0.0, sum_sq = 0.0;
      bool constant = true;
      for (const std::size_t r : rows) {
        sum += y[r];
        sum_sq += y[r] * y[r];
        constant &= (y[r] == y[rows.front()]);
      }
      // A constant node keeps the exact target value, not a rounded mean.
      nodes[id].value = constant ? y[rows.front()] : sum / static_cast<double>(n);

      const double node_sse = sum_sq - sum * sum / static_cast<double>(n);
      if (constant || depth >= params.max_depth ||
          n < 2 * params.min_samples_leaf)
        return id;

      int best_feature = -1;
      double best_threshold = 0.0;
      double best_score = 0.0;
      std::vector<std::pair<double, double>> points(n);  // (x, y) sorted by x

      for (const std::size_t f : candidate_features()) {
        for (std::size_t i = 0; i < n; ++i)
          points[i] = {X(rows[i], f), y[rows[i]]};
        std::sort(points.begin(), points.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double left_sum = 0.0, left_sq = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
          left_sum += points[i - 1].second;
          left_sq += points[i - 1].second * points[i - 1].second;
          if (i < params.min_samples_leaf || n - i < params.min_samples_leaf)
            continue;
          const double lo = points[i - 1].first;
          const double hi = points[i].first;
          if (!(lo < hi)) continue;
          const double nl = static_cast<double>(i);
          const double nr = static_cast<double>(n - i);
          const double right_sum = sum - left_sum;
          const double right_sq = sum_sq - left_sq;
          const double score = (left_sq - left_sum * left_sum / nl) +
                               (right_sq - right_sum * right_sum / nr);
          if (best_feature < 0 || score < best_score) {
            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold < hi)) threshold = lo;  // guard midpoint rounding
            best_feature = static_cast<int>(f);
            best_threshold = threshold;
            best_score = score;
          }
        }
      }

      // Split only on a real variance reduction.
      if (best_feature < 0 || !(node_sse - best_score > 1e-12 * node_sse))
        return id;

      std::vector<std::size_t> left_rows, right_rows;
      left_rows.reserve(n);
      right_rows.reserve(n);
      for (const std::size_t r : rows) {
        if (X(r, static_cast<std::size_t>(best_feature)) <= best_threshold)
          left_rows.push_back(r);
        else
          right_rows.push_back(r);
      }
      nodes[id].feature = best_feature;
      nodes[id].threshold = best_threshold;
      nodes[id].left = build(left_rows, depth + 1);
      nodes[id].right = build(right_rows, depth + 1);
      return id;
    }

    std::vector<std::size_t> candidate_features() const {
      const std::size_t d = X.cols();
      std::vector<std::size_t> all(d);
      std::iota(all.begin(), all.end(), std::size_t{0});
      if (mtry >= d || rng == nullptr) return all;
      // Partial Fisher-Yates, then ascending order so tie-breaking by lowest
      // feature index applies within the sampled set too.
      for (std::size_t i = 0; i < mtry; ++i)
        std::swap(all[i], all[i + rng->below(d - i)]);
      all.resize(mtry);
      std::sort(all.begin(), all.end());
      return all;
    }
  };

  std::vector<Node> nodes_;
  std::size_t d_ = 0;
};

}  // namespace attribforge
