#pragma once

#include <cmath>
#include <span>

#include "attribforge/errors.hpp"

namespace attribforge {

struct MetricTriple {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
};

// MSE, RMSE and MAE of predictions against actuals. RMSE = sqrt(MSE) holds
// for direct outputs; cross-validation averages triples per fold, where the
// identity intentionally does not survive.
inline MetricTriple metrics(std::span<const double> actual,
                            std::span<const double> predicted) {
  if (actual.size() != predicted.size())
    throw DataError("metrics: length mismatch");
  if (actual.empty()) throw DataError("metrics: empty vectors");
  const double m = static_cast<double>(actual.size());
  double squared = 0.0, absolute = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double err = actual[i] - predicted[i];
    squared += err * err;
    absolute += std::abs(err);
  }
  MetricTriple out;
  out.mse = squared / m;
  out.mae = absolute / m;
  out.rmse = std::sqrt(out.mse);
  return out;
}

}  // namespace attribforge
