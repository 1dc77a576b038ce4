#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "attribforge/errors.hpp"
#include "attribforge/matrix.hpp"

namespace attribforge {

struct KnnParams {
  std::size_t k = 5;
};

// Mean target of the k nearest training rows by Euclidean distance.
// Distance ties break toward the lower row index.
class KnnModel {
 public:
  static KnnModel fit(const Matrix& X, std::span<const double> y,
                      const KnnParams& params) {
    if (params.k < 1) throw DataError("knn: k must be at least 1");
    if (X.rows() < params.k)
      throw DataError("knn: k=" + std::to_string(params.k) +
                      " exceeds the " + std::to_string(X.rows()) +
                      " training rows");
    KnnModel model;
    model.train_ = X;
    model.targets_.assign(y.begin(), y.end());
    model.k_ = params.k;
    return model;
  }

  double predict_row(std::span<const double> q) const {
    const std::size_t n = train_.rows();
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = train_.row(i);
      double d2 = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double diff = q[j] - row[j];
        d2 += diff * diff;
      }
      dist[i] = d2;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + k_, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (dist[a] != dist[b]) return dist[a] < dist[b];
                        return a < b;
                      });
    double sum = 0.0;
    for (std::size_t i = 0; i < k_; ++i) sum += targets_[order[i]];
    return sum / static_cast<double>(k_);
  }

  std::size_t feature_count() const { return train_.cols(); }

 private:
  Matrix train_;
  std::vector<double> targets_;
  std::size_t k_ = 1;
};

}  // namespace attribforge
