#pragma once

#include <span>
#include <vector>

#include "attribforge/dataset.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/folds.hpp"
#include "attribforge/mask.hpp"
#include "attribforge/matrix.hpp"
#include "attribforge/metrics.hpp"
#include "attribforge/model.hpp"
#include "attribforge/parallel.hpp"

namespace attribforge {

struct CvOptions {
  // Refit the min-max scalers on each training fold instead of using the
  // dataset-level fit (which leaks fold statistics into training).
  bool per_fold_scaling = false;
  std::size_t threads = 1;
};

// k-fold cross-validation of `spec` on the masked feature columns. Each fold
// trains on the remaining k-1 folds and predicts the held-out rows; the
// triple is the arithmetic mean of the per-fold metrics, in fold order --
// not pooled residuals.
inline MetricTriple cross_validate(const EncodedDataset& data, const Mask& mask,
                                   const RegressorSpec& spec,
                                   const FoldPlan& plan,
                                   const CvOptions& options = {}) {
  if (mask.size() != data.features())
    throw DataError("cross_validate: mask length does not match feature count");
  const std::vector<std::size_t> columns = mask.selected();
  if (columns.empty()) throw DataError("cross_validate: empty mask");
  if (plan.assignments.size() != data.rows())
    throw DataError("cross_validate: fold plan does not match dataset rows");

  const Matrix& source = options.per_fold_scaling ? data.X_pre : data.X;
  const Matrix pool = source.select_columns(columns);

  std::vector<MetricTriple> fold_metrics(plan.k);
  parallel_for(plan.k, options.threads, [&](std::size_t fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      if (plan.assignments[r] == fold) test_rows.push_back(r);
      else train_rows.push_back(r);
    }
    if (train_rows.size() < 2)
      throw DataError("cross_validate: fold " + std::to_string(fold) +
                      " leaves fewer than 2 training rows");

    Matrix train = pool.select_rows(train_rows);
    Matrix test = pool.select_rows(test_rows);
    if (options.per_fold_scaling) {
      for (std::size_t j = 0; j < train.cols(); ++j) {
        double lo = train(0, j), hi = train(0, j);
        for (std::size_t i = 1; i < train.rows(); ++i) {
          lo = std::min(lo, train(i, j));
          hi = std::max(hi, train(i, j));
        }
        for (std::size_t i = 0; i < train.rows(); ++i)
          train(i, j) = min_max_scale(train(i, j), lo, hi);
        for (std::size_t i = 0; i < test.rows(); ++i)
          test(i, j) = min_max_scale(test(i, j), lo, hi);
      }
    }

    std::vector<double> train_y(train_rows.size()), test_y(test_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i)
      train_y[i] = data.y[train_rows[i]];
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      test_y[i] = data.y[test_rows[i]];

    const TrainedModel model = fit(spec, train, train_y);
    const std::vector<double> predicted = model.predict(test);
    fold_metrics[fold] = metrics(test_y, predicted);
  });

  MetricTriple mean;
  for (const auto& triple : fold_metrics) {
    mean.mse += triple.mse;
    mean.rmse += triple.rmse;
    mean.mae += triple.mae;
  }
  const double k = static_cast<double>(plan.k);
  mean.mse /= k;
  mean.rmse /= k;
  mean.mae /= k;
  return mean;
}

}  // namespace attribforge
