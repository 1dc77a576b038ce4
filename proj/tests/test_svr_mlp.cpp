#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "attribforge/mlp.hpp"
#include "attribforge/rng.hpp"
#include "attribforge/svr.hpp"

using namespace attribforge;

TEST_CASE("rbf kernel values") {
  const std::vector<double> x{0.3, 0.7};
  REQUIRE(rbf_kernel(x, x, 1.0) == 1.0);
  const std::vector<double> u{0.0, 0.0};
  const std::vector<double> v{1.0, 0.0};  // squared distance 1
  REQUIRE(rbf_kernel(u, v, 1.0) == Catch::Approx(0.36788).margin(1e-5));
}

TEST_CASE("svr fits a line within the documented error") {
  Matrix X(50, 1);
  std::vector<double> y(50);
  for (int i = 0; i < 50; ++i) {
    X(i, 0) = i / 49.0;
    y[i] = 2.0 * X(i, 0) + 1.0;
  }
  SvrParams params;
  params.c = 100.0;
  params.gamma = 1.0;
  params.epsilon = 0.01;
  const SvrModel model = SvrModel::fit(X, y, params);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i)
    worst = std::max(worst, std::abs(model.predict_row(X.row(i)) - y[i]));
  REQUIRE(worst <= 0.05);
}

TEST_CASE("svr respects the box constraint and decreases its objective") {
  Rng rng(21);
  Matrix X(60, 3);
  std::vector<double> y(60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.uniform01();
    y[i] = std::sin(5.0 * X(i, 0)) + X(i, 1) + rng.normal() * 0.05;
  }
  SvrParams params;
  params.c = 5.0;
  const SvrModel model = SvrModel::fit(X, y, params);
  for (const double b : model.beta()) REQUIRE(std::abs(b) <= params.c);

  const auto& trace = model.objective_trace();
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i) REQUIRE(trace[i] <= trace[i - 1]);
}

TEST_CASE("svr prediction decomposes over its dual coefficients") {
  Rng rng(22);
  Matrix X(30, 2);
  std::vector<double> y(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = rng.uniform01();
    X(i, 1) = rng.uniform01();
    y[i] = X(i, 0) * 3.0 - X(i, 1);
  }
  const SvrModel model = SvrModel::fit(X, y, SvrParams{});
  std::vector<double> q{0.4, 0.6};
  double expected = model.bias();
  for (std::size_t i = 0; i < 30; ++i)
    expected += model.beta()[i] * rbf_kernel(X.row(i), q, 1.0);
  REQUIRE(model.predict_row(q) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("mlp analytic gradient matches central differences") {
  Rng rng(23);
  for (int net = 0; net < 3; ++net) {
    const std::size_t d = 2 + net;
    const std::size_t hidden = 3 + net;
    Matrix X(10, d);
    std::vector<double> y(10);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1, 1);
      y[i] = rng.uniform(-1, 1);
    }
    std::vector<double> params(MlpModel::param_count(d, hidden));
    for (auto& p : params) p = rng.uniform(-0.6, 0.6);
    std::vector<double> grad(params.size());
    MlpModel::loss_and_gradient(X, y, hidden, params, grad);

    const double step = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> plus = params, minus = params;
      plus[k] += step;
      minus[k] -= step;
      const double fd = (MlpModel::loss_and_gradient(X, y, hidden, plus, {}) -
                         MlpModel::loss_and_gradient(X, y, hidden, minus, {})) /
                        (2 * step);
      const double scale = std::max({1e-6, std::abs(fd), std::abs(grad[k])});
      REQUIRE(std::abs(fd - grad[k]) / scale < 1e-4);
    }
  }
}

TEST_CASE("mlp training reduces the loss") {
  Rng rng(24);
  Matrix X(40, 2);
  std::vector<double> y(40);
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = rng.uniform01();
    X(i, 1) = rng.uniform01();
    y[i] = X(i, 0) + 2.0 * X(i, 1);
  }
  const MlpModel model = MlpModel::fit(X, y, MlpParams{}, 3);
  double sse = 0.0, baseline = 0.0, mean = 0.0;
  for (const double v : y) mean += v;
  mean /= 40.0;
  for (int i = 0; i < 40; ++i) {
    const double err = model.predict_row(X.row(i)) - y[i];
    sse += err * err;
    baseline += (y[i] - mean) * (y[i] - mean);
  }
  REQUIRE(sse < 0.5 * baseline);
}
