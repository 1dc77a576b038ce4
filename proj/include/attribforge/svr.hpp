#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "attribforge/errors.hpp"
#include "attribforge/matrix.hpp"

namespace attribforge {

struct SvrParams {
  double c = 10.0;
  double gamma = 1.0;
  double epsilon = 0.1;
  double tol = 1e-3;
  std::size_t max_iter = 100000;
};

inline double rbf_kernel(std::span<const double> u, std::span<const double> v,
                         double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double diff = u[i] - v[i];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

// epsilon-SVR with an RBF kernel, solved by SMO on the combined dual
// variables beta_i = alpha_i - alpha_i^*:
//
//   minimize  D(beta) = 1/2 beta' K beta - y' beta + epsilon * |beta|_1
//   subject to  sum(beta) = 0,  |beta_i| <= C
//
// Each step picks the most violating pair by first-order KKT conditions and
// solves the two-variable subproblem exactly over its piecewise-quadratic
// objective, so the dual objective never increases.
class SvrModel {
 public:
  static SvrModel fit(const Matrix& X, std::span<const double> y,
                      const SvrParams& params) {
    if (!(params.c > 0.0)) throw DataError("svr: C must be positive");
    if (!(params.gamma > 0.0)) throw DataError("svr: gamma must be positive");
    if (!(params.epsilon >= 0.0)) throw DataError("svr: epsilon must be >= 0");

    const std::size_t n = X.rows();
    SvrModel model;
    model.train_ = X;
    model.gamma_ = params.gamma;
    model.beta_.assign(n, 0.0);
    model.solve(y, params);
    return model;
  }

  double predict_row(std::span<const double> q) const {
    double sum = bias_;
    for (std::size_t i = 0; i < beta_.size(); ++i) {
      if (beta_[i] == 0.0) continue;
      sum += beta_[i] * rbf_kernel(train_.row(i), q, gamma_);
    }
    return sum;
  }

  std::size_t feature_count() const { return train_.cols(); }
  const std::vector<double>& beta() const { return beta_; }
  double bias() const { return bias_; }
  // Dual objective after each accepted SMO step (index 0 = initial state).
  const std::vector<double>& objective_trace() const { return trace_; }

 private:
  void solve(std::span<const double> y, const SvrParams& params) {
    const std::size_t n = beta_.size();
    const double C = params.c;
    const double eps = params.epsilon;

    // Kernel matrix cached in full for the data sizes this library targets;
    // larger fits recompute columns on demand.
    const bool cache = n <= 3000;
    Matrix K;
    if (cache) {
      K = Matrix(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
          const double k = rbf_kernel(train_.row(i), train_.row(j), gamma_);
          K(i, j) = k;
          K(j, i) = k;
        }
      }
    }
    std::vector<double> col_i(n), col_j(n);
    auto kernel_col = [&](std::size_t i, std::vector<double>& out) -> const double* {
      if (cache) return &K.data()[i * n];
      for (std::size_t r = 0; r < n; ++r)
        out[r] = rbf_kernel(train_.row(i), train_.row(r), gamma_);
      return out.data();
    };

    // G = K beta - y; beta starts at zero.
    std::vector<double> G(n);
    for (std::size_t i = 0; i < n; ++i) G[i] = -y[i];

    double objective = 0.0;
    trace_.assign(1, objective);

    for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
      // Directional derivatives: raising beta_i costs up(i), lowering
      // beta_j gains dn(j); the pair is KKT-consistent when no choice has
      // dn(j) - up(i) above tolerance.
      std::size_t i = n, j = n;
      double up_best = std::numeric_limits<double>::infinity();
      double dn_best = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        if (beta_[t] < C) {
          const double up = G[t] + (beta_[t] >= 0.0 ? eps : -eps);
          if (up < up_best) {
            up_best = up;
            i = t;
          }
        }
        if (beta_[t] > -C) {
          const double dn = G[t] + (beta_[t] > 0.0 ? eps : -eps);
          if (dn > dn_best) {
            dn_best = dn;
            j = t;
          }
        }
      }
      if (i == n || j == n || dn_best - up_best <= params.tol) break;
      if (i == j) {
        // The same index won both scans; take the second-best partner.
        std::size_t alt = n;
        double alt_best = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
          if (t == i || beta_[t] <= -C) continue;
          const double dn = G[t] + (beta_[t] > 0.0 ? eps : -eps);
          if (dn > alt_best) {
            alt_best = dn;
            alt = t;
          }
        }
        if (alt == n || alt_best - up_best <= params.tol) break;
        j = alt;
      }

      const double* Ki = kernel_col(i, col_i);
      const double* Kj = kernel_col(j, col_j);
      const double eta = std::max(Ki[i] + Kj[j] - 2.0 * Ki[j], 0.0);
      const double a = G[i] - G[j];
      const double bi = beta_[i];
      const double bj = beta_[j];
      const double lo = std::max(-C - bi, bj - C);
      const double hi = std::min(C - bi, bj + C);

      const auto delta_obj = [&](double t) {
        return a * t + 0.5 * eta * t * t +
               eps * (std::abs(bi + t) - std::abs(bi) + std::abs(bj - t) -
                      std::abs(bj));
      };

      // Candidate steps: interval ends, the two kinks, and the stationary
      // point of each sign regime.
      double candidates[8];
      std::size_t count = 0;
      candidates[count++] = lo;
      candidates[count++] = hi;
      if (-bi > lo && -bi < hi) candidates[count++] = -bi;
      if (bj > lo && bj < hi) candidates[count++] = bj;
      if (eta > 0.0) {
        for (const double si : {-1.0, 1.0})
          for (const double sj : {-1.0, 1.0}) {
            const double t = -(a + eps * (si - sj)) / eta;
            if (t > lo && t < hi) candidates[count++] = t;
          }
      }
      std::sort(candidates, candidates + count);

      double best_t = 0.0;
      double best_delta = 0.0;
      for (std::size_t c = 0; c < count; ++c) {
        const double delta = delta_obj(candidates[c]);
        if (delta < best_delta) {
          best_delta = delta;
          best_t = candidates[c];
        }
      }
      if (!(best_delta < -1e-14 * (1.0 + std::abs(objective)))) break;

      const double new_bi = std::clamp(bi + best_t, -C, C);
      const double new_bj = std::clamp(bj - best_t, -C, C);
      const double di = new_bi - bi;
      const double dj = new_bj - bj;
      beta_[i] = new_bi;
      beta_[j] = new_bj;
      for (std::size_t t = 0; t < n; ++t) G[t] += di * Ki[t] + dj * Kj[t];
      objective += best_delta;
      trace_.push_back(objective);
    }

    // Bias from KKT conditions: free vectors give it exactly; otherwise the
    // feasible interval's midpoint (covers the all-bounded and all-zero cases).
    double free_sum = 0.0;
    std::size_t free_count = 0;
    double lo_bound = -std::numeric_limits<double>::infinity();
    double hi_bound = std::numeric_limits<double>::infinity();
    const double box_margin = C * 1e-12;
    for (std::size_t t = 0; t < n; ++t) {
      const double b = beta_[t];
      const double target = -G[t];
      if (std::abs(b) > box_margin && std::abs(b) < C - box_margin) {
        free_sum += target - (b > 0.0 ? eps : -eps);
        ++free_count;
      } else if (std::abs(b) <= box_margin) {
        lo_bound = std::max(lo_bound, target - eps);
        hi_bound = std::min(hi_bound, target + eps);
      } else if (b > 0.0) {  // beta = +C
        hi_bound = std::min(hi_bound, target - eps);
      } else {  // beta = -C
        lo_bound = std::max(lo_bound, target + eps);
      }
    }
    if (free_count > 0) {
      bias_ = free_sum / static_cast<double>(free_count);
    } else if (std::isfinite(lo_bound) && std::isfinite(hi_bound)) {
      bias_ = (lo_bound + hi_bound) / 2.0;
    } else if (std::isfinite(lo_bound)) {
      bias_ = lo_bound;
    } else if (std::isfinite(hi_bound)) {
      bias_ = hi_bound;
    } else {
      bias_ = 0.0;
    }
  }

  Matrix train_;
  std::vector<double> beta_;
  double bias_ = 0.0;
  double gamma_ = 1.0;
  std::vector<double> trace_;
};

}  // namespace attribforge
