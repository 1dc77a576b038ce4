#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "attribforge/errors.hpp"
#include "attribforge/matrix.hpp"
#include "attribforge/rng.hpp"

namespace attribforge {

struct MlpParams {
  std::size_t hidden = 16;
  std::size_t epochs = 500;
  double learning_rate = 0.01;
};

inline constexpr std::uint64_t kMlpStream = 0x6d6c70ULL;  // "mlp"

// One hidden ReLU layer trained by full-batch gradient descent on squared
// loss. Targets are centered and the output layer starts at zero, so the
// initial prediction is exactly the target mean; a constant target stays
// fixed there.
class MlpModel {
 public:
  static std::size_t param_count(std::size_t d, std::size_t hidden) {
    return hidden * d + hidden + hidden + 1;  // W1, b1, W2, b2
  }

  // Mean squared loss over (X, y) at the given flat parameter vector
  // [W1 row-major hidden x d | b1 | W2 | b2]; writes the analytic gradient
  // when grad is non-empty. Shared by training and the finite-difference
  // check in the tests.
  static double loss_and_gradient(const Matrix& X, std::span<const double> y,
                                  std::size_t hidden,
                                  std::span<const double> params,
                                  std::span<double> grad) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    const double* W1 = params.data();
    const double* b1 = W1 + hidden * d;
    const double* W2 = b1 + hidden;
    const double b2 = W2[hidden];

    double* gW1 = nullptr;
    double* gb1 = nullptr;
    double* gW2 = nullptr;
    double* gb2 = nullptr;
    if (!grad.empty()) {
      std::fill(grad.begin(), grad.end(), 0.0);
      gW1 = grad.data();
      gb1 = gW1 + hidden * d;
      gW2 = gb1 + hidden;
      gb2 = gW2 + hidden;
    }

    std::vector<double> h(hidden);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto x = X.row(r);
      double out = b2;
      for (std::size_t k = 0; k < hidden; ++k) {
        double pre = b1[k];
        const double* w = W1 + k * d;
        for (std::size_t f = 0; f < d; ++f) pre += w[f] * x[f];
        h[k] = pre > 0.0 ? pre : 0.0;
        out += W2[k] * h[k];
      }
      const double err = out - y[r];
      loss += err * err * inv_n;
      if (grad.empty()) continue;

      const double dout = 2.0 * err * inv_n;
      *gb2 += dout;
      for (std::size_t k = 0; k < hidden; ++k) {
        gW2[k] += dout * h[k];
        if (h[k] <= 0.0) continue;
        const double dpre = dout * W2[k];
        gb1[k] += dpre;
        double* gw = gW1 + k * d;
        for (std::size_t f = 0; f < d; ++f) gw[f] += dpre * x[f];
      }
    }
    return loss;
  }

  static MlpModel fit(const Matrix& X, std::span<const double> y,
                      const MlpParams& params, std::uint64_t seed) {
    if (params.hidden < 1) throw DataError("mlp: hidden must be at least 1");
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();

    MlpModel model;
    model.d_ = d;
    model.hidden_ = params.hidden;
    double mean = 0.0;
    for (const double v : y) mean += v;
    model.y_offset_ = mean / static_cast<double>(n);
    std::vector<double> centered(y.begin(), y.end());
    for (double& v : centered) v -= model.y_offset_;

    model.params_.assign(param_count(d, params.hidden), 0.0);
    Rng rng(derive_seed(seed, kMlpStream));
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < params.hidden * d; ++i)
      model.params_[i] = rng.uniform(-scale, scale);
    // b1, W2, b2 stay zero; the first step moves the output layer.

    std::vector<double> grad(model.params_.size());
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
      loss_and_gradient(X, centered, params.hidden, model.params_, grad);
      for (std::size_t i = 0; i < grad.size(); ++i)
        model.params_[i] -= params.learning_rate * grad[i];
    }
    return model;
  }

  double predict_row(std::span<const double> x) const {
    const double* W1 = params_.data();
    const double* b1 = W1 + hidden_ * d_;
    const double* W2 = b1 + hidden_;
    double out = W2[hidden_] + y_offset_;
    for (std::size_t k = 0; k < hidden_; ++k) {
      double pre = b1[k];
      const double* w = W1 + k * d_;
      for (std::size_t f = 0; f < d_; ++f) pre += w[f] * x[f];
      if (pre > 0.0) out += W2[k] * pre;
    }
    return out;
  }

  std::size_t feature_count() const { return d_; }
  const std::vector<double>& parameters() const { return params_; }

 private:
  std::vector<double> params_;
  std::size_t d_ = 0;
  std::size_t hidden_ = 0;
  double y_offset_ = 0.0;
};

}  // namespace attribforge
