#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "attribforge/decision_tree.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/matrix.hpp"
#include "attribforge/parallel.hpp"
#include "attribforge/rng.hpp"

namespace attribforge {

struct ForestParams {
  std::size_t trees = 100;
  bool bootstrap = true;
  std::size_t mtry = 0;  // 0 -> ceil(d / 3)
  TreeParams tree;
};

inline constexpr std::uint64_t kForestStream = 0x666f72657374ULL;  // "forest"

// Bagged CART trees, mean-aggregated. Each tree derives its own seed from
// (seed, tree index), so serial and parallel fits agree bit-for-bit.
class RandomForestModel {
 public:
  static RandomForestModel fit(const Matrix& X, std::span<const double> y,
                               const ForestParams& params, std::uint64_t seed,
                               std::size_t threads = 1) {
    if (params.trees < 1) throw DataError("rforest: trees must be at least 1");
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    const std::size_t mtry = params.mtry == 0 ? (d + 2) / 3
                                              : std::min(params.mtry, d);

    RandomForestModel model;
    model.d_ = d;
    model.trees_.resize(params.trees);
    parallel_for(params.trees, threads, [&](std::size_t t) {
      Rng rng(derive_seed(seed, kForestStream, t));
      std::vector<std::size_t> rows(n);
      if (params.bootstrap) {
        for (auto& r : rows) r = rng.below(n);
      } else {
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      }
      model.trees_[t] =
          DecisionTreeModel::fit_subset(X, y, params.tree, rows, mtry, &rng);
    });
    return model;
  }

  // Exactly the mean of the member trees, summed in tree order.
  double predict_row(std::span<const double> q) const {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict_row(q);
    return sum / static_cast<double>(trees_.size());
  }

  std::size_t feature_count() const { return d_; }
  const std::vector<DecisionTreeModel>& trees() const { return trees_; }

 private:
  std::vector<DecisionTreeModel> trees_;
  std::size_t d_ = 0;
};

}  // namespace attribforge
