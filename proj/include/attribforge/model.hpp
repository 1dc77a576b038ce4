#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attribforge/errors.hpp"
#include "attribforge/knn.hpp"
#include "attribforge/decision_tree.hpp"
#include "attribforge/matrix.hpp"
#include "attribforge/mlp.hpp"
#include "attribforge/random_forest.hpp"
#include "attribforge/svr.hpp"

namespace attribforge {

enum class ModelKind { knn, dtree, rforest, svr, mlp };

inline const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::knn: return "knn";
    case ModelKind::dtree: return "dtree";
    case ModelKind::rforest: return "rforest";
    case ModelKind::svr: return "svr";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

// Accepts the short aliases the comparison tables use (dt, rf, ann).
inline ModelKind model_kind_from_string(const std::string& name) {
  if (name == "knn") return ModelKind::knn;
  if (name == "dtree" || name == "dt") return ModelKind::dtree;
  if (name == "rforest" || name == "rf") return ModelKind::rforest;
  if (name == "svr") return ModelKind::svr;
  if (name == "mlp" || name == "ann") return ModelKind::mlp;
  throw DataError("unknown model kind: '" + name + "'");
}

// Declarative model choice: kind + hyperparameters + seed. Unknown keys are
// rejected at fit time so config typos surface early.
struct RegressorSpec {
  ModelKind kind = ModelKind::knn;
  std::map<std::string, double> hyperparams;
  std::uint64_t seed = 0;

  double param(const std::string& key, double fallback) const {
    const auto it = hyperparams.find(key);
    return it == hyperparams.end() ? fallback : it->second;
  }
};

// Immutable fitted predictor behind a value-semantic handle.
class TrainedModel {
 public:
  TrainedModel() = default;

  template <typename M>
  explicit TrainedModel(M model)
      : impl_(std::make_shared<Holder<M>>(std::move(model))) {}

  double predict_row(std::span<const double> x) const {
    if (x.size() != feature_count())
      throw DataError("predict: expected " + std::to_string(feature_count()) +
                      " features, got " + std::to_string(x.size()));
    return impl_->predict_row(x);
  }

  std::vector<double> predict(const Matrix& X) const {
    if (X.cols() != feature_count())
      throw DataError("predict: expected " + std::to_string(feature_count()) +
                      " features, got " + std::to_string(X.cols()));
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = impl_->predict_row(X.row(i));
    return out;
  }

  std::size_t feature_count() const {
    if (!impl_) throw DataError("predict on an unfitted model");
    return impl_->feature_count();
  }

  template <typename M>
  const M* as() const {
    const auto* holder = dynamic_cast<const Holder<M>*>(impl_.get());
    return holder ? &holder->model : nullptr;
  }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual double predict_row(std::span<const double>) const = 0;
    virtual std::size_t feature_count() const = 0;
  };

  template <typename M>
  struct Holder final : Concept {
    explicit Holder(M m) : model(std::move(m)) {}
    double predict_row(std::span<const double> x) const override {
      return model.predict_row(x);
    }
    std::size_t feature_count() const override { return model.feature_count(); }
    M model;
  };

  std::shared_ptr<const Concept> impl_;
};

// Wraps an arbitrary prediction function; explainers treat it like any
// fitted model.
class CallablePredictor {
 public:
  CallablePredictor(std::size_t d,
                    std::function<double(std::span<const double>)> fn)
      : d_(d), fn_(std::move(fn)) {}
  double predict_row(std::span<const double> x) const { return fn_(x); }
  std::size_t feature_count() const { return d_; }

 private:
  std::size_t d_;
  std::function<double(std::span<const double>)> fn_;
};

inline TrainedModel make_predictor(
    std::size_t d, std::function<double(std::span<const double>)> fn) {
  return TrainedModel(CallablePredictor(d, std::move(fn)));
}

namespace detail {

inline std::size_t size_param(const RegressorSpec& spec, const std::string& key,
                              std::size_t fallback, std::size_t min_value) {
  const double raw = spec.param(key, static_cast<double>(fallback));
  if (!(raw >= static_cast<double>(min_value)) || raw != std::floor(raw))
    throw DataError(std::string(to_string(spec.kind)) + ": " + key +
                    " must be an integer >= " + std::to_string(min_value));
  return static_cast<std::size_t>(raw);
}

inline void check_keys(const RegressorSpec& spec,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : spec.hyperparams) {
    bool ok = false;
    for (const char* name : allowed) ok |= (key == name);
    if (!ok)
      throw DataError(std::string(to_string(spec.kind)) +
                      ": unknown hyperparameter '" + key + "'");
  }
}

}  // namespace detail

// Fits the requested model. Deterministic given (spec, X, y): every source
// of randomness derives from spec.seed. `threads` only fans out forest
// trees, whose per-tree seeds make parallel and serial fits identical.
inline TrainedModel fit(const RegressorSpec& spec, const Matrix& X,
                        std::span<const double> y, std::size_t threads = 1) {
  if (X.rows() < 2) throw DataError("fit: need at least 2 training rows");
  if (X.cols() < 1) throw DataError("fit: need at least 1 feature");
  if (y.size() != X.rows()) throw DataError("fit: X and y row counts differ");
  for (const double v : X.data())
    if (!std::isfinite(v)) throw DataError("fit: non-finite feature value");
  for (const double v : y)
    if (!std::isfinite(v)) throw DataError("fit: non-finite target value");

  switch (spec.kind) {
    case ModelKind::knn: {
      detail::check_keys(spec, {"k"});
      KnnParams params;
      params.k = detail::size_param(spec, "k", 5, 1);
      return TrainedModel(KnnModel::fit(X, y, params));
    }
    case ModelKind::dtree: {
      detail::check_keys(spec, {"max_depth", "min_samples_leaf"});
      TreeParams params;
      params.max_depth = detail::size_param(spec, "max_depth", 8, 1);
      params.min_samples_leaf = detail::size_param(spec, "min_samples_leaf", 5, 1);
      return TrainedModel(DecisionTreeModel::fit(X, y, params));
    }
    case ModelKind::rforest: {
      detail::check_keys(spec,
                         {"trees", "bootstrap", "mtry", "max_depth",
                          "min_samples_leaf"});
      ForestParams params;
      params.trees = detail::size_param(spec, "trees", 100, 1);
      params.bootstrap = spec.param("bootstrap", 1.0) != 0.0;
      params.mtry = detail::size_param(spec, "mtry", 0, 0);
      params.tree.max_depth = detail::size_param(spec, "max_depth", 8, 1);
      params.tree.min_samples_leaf =
          detail::size_param(spec, "min_samples_leaf", 5, 1);
      return TrainedModel(
          RandomForestModel::fit(X, y, params, spec.seed, threads));
    }
    case ModelKind::svr: {
      detail::check_keys(spec, {"c", "gamma", "epsilon", "tol", "max_iter"});
      SvrParams params;
      params.c = spec.param("c", 10.0);
      params.gamma = spec.param("gamma", 1.0);
      params.epsilon = spec.param("epsilon", 0.1);
      params.tol = spec.param("tol", 1e-3);
      params.max_iter = detail::size_param(spec, "max_iter", 100000, 1);
      return TrainedModel(SvrModel::fit(X, y, params));
    }
    case ModelKind::mlp: {
      detail::check_keys(spec, {"hidden", "epochs", "learning_rate"});
      MlpParams params;
      params.hidden = detail::size_param(spec, "hidden", 16, 1);
      params.epochs = detail::size_param(spec, "epochs", 500, 0);
      params.learning_rate = spec.param("learning_rate", 0.01);
      if (!(params.learning_rate > 0.0))
        throw DataError("mlp: learning_rate must be positive");
      return TrainedModel(MlpModel::fit(X, y, params, spec.seed));
    }
  }
  throw DataError("fit: unhandled model kind");
}

}  // namespace attribforge
