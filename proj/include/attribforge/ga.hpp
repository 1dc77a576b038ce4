#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "attribforge/cross_validation.hpp"
#include "attribforge/dataset.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/folds.hpp"
#include "attribforge/mask.hpp"
#include "attribforge/metrics.hpp"
#include "attribforge/model.hpp"
#include "attribforge/parallel.hpp"
#include "attribforge/rng.hpp"

namespace attribforge {

struct GAConfig {
  std::size_t population = 100;
  std::size_t generations = 50;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  std::size_t top_k = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool memoize = true;  // caching is observable only as runtime
};

struct Individual {
  Mask mask;
  MetricTriple fitness;     // fitness value = mae
  std::uint64_t order = 0;  // creation index, breaks fitness ties
};

struct GAProgress {
  std::size_t generation = 0;
  double best_mae = 0.0;
  double mean_mae = 0.0;
};

struct GAResult {
  std::vector<Individual> top;      // top_k distinct masks, MAE ascending
  std::vector<GAProgress> progress; // one entry per generation, 0 = initial
  std::size_t evaluations = 0;      // distinct masks evaluated
};

inline constexpr std::uint64_t kGaStream = 0x6761ULL;        // "ga"
inline constexpr std::uint64_t kGaInitStream = 0x6761696eULL;

inline void repair_mask(Mask& mask, Rng& rng) {
  if (mask.count() == 0) mask.bits[rng.below(mask.size())] = 1;
}

// Population of fair-coin masks; all-zero genomes get one random bit.
inline std::vector<Mask> init_population(std::size_t d, const GAConfig& config,
                                         Rng& rng) {
  if (d < 1) throw DataError("init_population: need at least one feature");
  if (config.population < 2)
    throw DataError("init_population: population must be at least 2");
  std::vector<Mask> masks(config.population, Mask(d));
  for (auto& mask : masks) {
    for (auto& bit : mask.bits) bit = rng.uniform01() < 0.5 ? 1 : 0;
    repair_mask(mask, rng);
  }
  return masks;
}

// Roulette wheel under minimization: weight = (mae_max - mae) + epsilon with
// epsilon = 1e-9 + 0.01 * (mae_max - mae_min), so the worst individual keeps
// a small but nonzero chance.
inline const Individual& roulette_select(const std::vector<Individual>& population,
                                         Rng& rng) {
  if (population.empty()) throw DataError("roulette_select: empty population");
  double mae_min = population.front().fitness.mae;
  double mae_max = mae_min;
  for (const auto& ind : population) {
    mae_min = std::min(mae_min, ind.fitness.mae);
    mae_max = std::max(mae_max, ind.fitness.mae);
  }
  const double epsilon = 1e-9 + 0.01 * (mae_max - mae_min);
  double total = 0.0;
  for (const auto& ind : population) total += (mae_max - ind.fitness.mae) + epsilon;
  const double pick = rng.uniform01() * total;
  double cumulative = 0.0;
  for (const auto& ind : population) {
    cumulative += (mae_max - ind.fitness.mae) + epsilon;
    if (pick < cumulative) return ind;
  }
  return population.back();
}

// Uniform crossover applied with probability crossover_rate (else clones);
// each position swaps independently with probability 1/2.
inline std::pair<Mask, Mask> crossover(const Mask& a, const Mask& b,
                                       double crossover_rate, Rng& rng) {
  if (a.size() != b.size()) throw DataError("crossover: mask length mismatch");
  Mask child_a = a;
  Mask child_b = b;
  if (rng.uniform01() < crossover_rate) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (rng.uniform01() < 0.5) std::swap(child_a.bits[i], child_b.bits[i]);
  }
  repair_mask(child_a, rng);
  repair_mask(child_b, rng);
  return {child_a, child_b};
}

// With probability mutation_rate, flips exactly one uniformly chosen bit.
inline Mask mutate(const Mask& mask, double mutation_rate, Rng& rng) {
  Mask out = mask;
  if (rng.uniform01() < mutation_rate) {
    const std::size_t i = rng.below(out.size());
    out.bits[i] ^= 1;
    repair_mask(out, rng);
  }
  return out;
}

// Elitist mu+lambda truncation: best `population` of parents plus offspring,
// MAE ascending, ties to the earlier creation.
inline std::vector<Individual> survive(const std::vector<Individual>& parents,
                                       const std::vector<Individual>& offspring,
                                       std::size_t population) {
  std::vector<Individual> merged;
  merged.reserve(parents.size() + offspring.size());
  merged.insert(merged.end(), parents.begin(), parents.end());
  merged.insert(merged.end(), offspring.begin(), offspring.end());
  std::sort(merged.begin(), merged.end(), [](const Individual& a, const Individual& b) {
    if (a.fitness.mae != b.fitness.mae) return a.fitness.mae < b.fitness.mae;
    return a.order < b.order;
  });
  if (merged.size() > population) merged.resize(population);
  return merged;
}

using FitnessFn = std::function<MetricTriple(const Mask&)>;

namespace detail {

// Evaluation cache shared across one GA run. Unevaluated masks of a batch
// run through a parallel map in first-appearance order; insertion stays on
// the coordinating thread so results are schedule-independent.
class MaskEvaluator {
 public:
  MaskEvaluator(FitnessFn fitness, bool memoize, std::size_t threads)
      : fitness_(std::move(fitness)), memoize_(memoize), threads_(threads) {}

  std::vector<MetricTriple> evaluate(const std::vector<Mask>& masks) {
    std::vector<Mask> pending;
    for (const auto& mask : masks) {
      if (!memoize_) {
        pending.push_back(mask);
        continue;
      }
      if (cache_.find(mask.bits) == cache_.end() &&
          std::find_if(pending.begin(), pending.end(), [&](const Mask& p) {
            return p == mask;
          }) == pending.end())
        pending.push_back(mask);
    }
    std::vector<MetricTriple> fresh(pending.size());
    parallel_for(pending.size(), threads_,
                 [&](std::size_t i) { fresh[i] = fitness_(pending[i]); });
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (cache_.emplace(pending[i].bits, fresh[i]).second)
        log_.push_back({pending[i], fresh[i]});
    }

    std::vector<MetricTriple> out;
    out.reserve(masks.size());
    if (memoize_) {
      for (const auto& mask : masks) out.push_back(cache_.at(mask.bits));
    } else {
      for (std::size_t i = 0; i < masks.size(); ++i) out.push_back(fresh[i]);
    }
    return out;
  }

  // Distinct evaluated masks in first-evaluation order.
  const std::vector<std::pair<Mask, MetricTriple>>& log() const { return log_; }

 private:
  FitnessFn fitness_;
  bool memoize_;
  std::size_t threads_;
  std::map<std::vector<std::uint8_t>, MetricTriple> cache_;
  std::vector<std::pair<Mask, MetricTriple>> log_;
};

}  // namespace detail

// Core GA loop over an arbitrary fitness function (lower MAE is better).
inline GAResult run_ga_with_fitness(std::size_t d, const GAConfig& config,
                                    const FitnessFn& fitness) {
  Rng rng(derive_seed(config.seed, kGaStream));
  detail::MaskEvaluator evaluator(fitness, config.memoize, config.threads);
  std::uint64_t next_order = 0;

  const auto make_individuals = [&](const std::vector<Mask>& masks) {
    const std::vector<MetricTriple> triples = evaluator.evaluate(masks);
    std::vector<Individual> out(masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i)
      out[i] = Individual{masks[i], triples[i], next_order++};
    return out;
  };

  GAResult result;
  const auto log_generation = [&](std::size_t gen,
                                  const std::vector<Individual>& population) {
    double best = population.front().fitness.mae;
    double sum = 0.0;
    for (const auto& ind : population) {
      best = std::min(best, ind.fitness.mae);
      sum += ind.fitness.mae;
    }
    result.progress.push_back(
        {gen, best, sum / static_cast<double>(population.size())});
  };

  std::vector<Individual> population =
      make_individuals(init_population(d, config, rng));
  log_generation(0, population);

  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    std::vector<Mask> offspring;
    offspring.reserve(config.population);
    while (offspring.size() < config.population) {
      const Individual& parent_a = roulette_select(population, rng);
      const Individual& parent_b = roulette_select(population, rng);
      auto [child_a, child_b] =
          crossover(parent_a.mask, parent_b.mask, config.crossover_rate, rng);
      offspring.push_back(mutate(child_a, config.mutation_rate, rng));
      if (offspring.size() < config.population)
        offspring.push_back(mutate(child_b, config.mutation_rate, rng));
    }
    population = survive(population, make_individuals(offspring), config.population);
    log_generation(gen, population);
  }

  // Top-k distinct masks over everything the run evaluated.
  std::vector<std::pair<Mask, MetricTriple>> seen = evaluator.log();
  std::stable_sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) {
    return a.second.mae < b.second.mae;
  });
  const std::size_t take = std::min(config.top_k, seen.size());
  for (std::size_t i = 0; i < take; ++i)
    result.top.push_back({seen[i].first, seen[i].second, i});
  result.evaluations = evaluator.log().size();
  return result;
}

// Wrapper feature selection: minimizes cross-validated MAE of `spec` over
// feature masks. The fold plan is frozen for the whole run so fitness is a
// pure function of the mask.
inline GAResult run_ga(const EncodedDataset& data, const RegressorSpec& spec,
                       const GAConfig& config, const FoldPlan& plan,
                       const CvOptions& cv_options = {}) {
  return run_ga_with_fitness(data.features(), config, [&](const Mask& mask) {
    return cross_validate(data, mask, spec, plan, cv_options);
  });
}

// ---------------------------------------------------------------------------
// Continuous GA over SVR hyperparameters.

struct HyperGenome {
  double c = 10.0;
  double gamma = 1.0;
};

struct HyperBounds {
  double c_lo = 0.1, c_hi = 100.0;
  double gamma_lo = 0.001, gamma_hi = 10.0;
};

inline constexpr std::uint64_t kTuneStream = 0x74756e65ULL;  // "tune"

// Real-coded GA in log-space over (C, gamma): log-uniform init, blend
// crossover, Gaussian mutation with sigma = 10% of the log-range, clamped.
inline HyperGenome tune_svr_with_fitness(
    const GAConfig& config, const HyperBounds& bounds,
    const std::function<double(const HyperGenome&)>& mae_of) {
  struct Entry {
    double log_c, log_g, mae;
    std::uint64_t order;
  };
  const double lc_lo = std::log(bounds.c_lo), lc_hi = std::log(bounds.c_hi);
  const double lg_lo = std::log(bounds.gamma_lo), lg_hi = std::log(bounds.gamma_hi);
  const double sigma_c = 0.1 * (lc_hi - lc_lo);
  const double sigma_g = 0.1 * (lg_hi - lg_lo);

  Rng rng(derive_seed(config.seed, kTuneStream));
  std::map<std::pair<double, double>, double> cache;
  const auto evaluate = [&](double log_c, double log_g) {
    const auto key = std::make_pair(log_c, log_g);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double mae = mae_of({std::exp(log_c), std::exp(log_g)});
    cache.emplace(key, mae);
    return mae;
  };

  std::uint64_t next_order = 0;
  std::vector<Entry> population;
  for (std::size_t i = 0; i < config.population; ++i) {
    const double log_c = rng.uniform(lc_lo, lc_hi);
    const double log_g = rng.uniform(lg_lo, lg_hi);
    population.push_back({log_c, log_g, evaluate(log_c, log_g), next_order++});
  }

  const auto select = [&]() -> const Entry& {
    double lo = population.front().mae, hi = lo;
    for (const auto& e : population) {
      lo = std::min(lo, e.mae);
      hi = std::max(hi, e.mae);
    }
    const double epsilon = 1e-9 + 0.01 * (hi - lo);
    double total = 0.0;
    for (const auto& e : population) total += (hi - e.mae) + epsilon;
    const double pick = rng.uniform01() * total;
    double cumulative = 0.0;
    for (const auto& e : population) {
      cumulative += (hi - e.mae) + epsilon;
      if (pick < cumulative) return e;
    }
    return population.back();
  };

  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    std::vector<Entry> offspring;
    while (offspring.size() < config.population) {
      const Entry& pa = select();
      const Entry& pb = select();
      double log_c = pa.log_c, log_g = pa.log_g;
      if (rng.uniform01() < config.crossover_rate) {
        log_c = rng.uniform(std::min(pa.log_c, pb.log_c), std::max(pa.log_c, pb.log_c));
        log_g = rng.uniform(std::min(pa.log_g, pb.log_g), std::max(pa.log_g, pb.log_g));
      }
      if (rng.uniform01() < config.mutation_rate) {
        log_c += rng.normal() * sigma_c;
        log_g += rng.normal() * sigma_g;
      }
      log_c = std::clamp(log_c, lc_lo, lc_hi);
      log_g = std::clamp(log_g, lg_lo, lg_hi);
      offspring.push_back({log_c, log_g, evaluate(log_c, log_g), next_order++});
    }
    population.insert(population.end(), offspring.begin(), offspring.end());
    std::sort(population.begin(), population.end(), [](const Entry& a, const Entry& b) {
      if (a.mae != b.mae) return a.mae < b.mae;
      return a.order < b.order;
    });
    population.resize(config.population);
  }

  const Entry* best = &population.front();
  for (const auto& e : population)
    if (e.mae < best->mae) best = &e;
  return {std::exp(best->log_c), std::exp(best->log_g)};
}

// Tunes (C, gamma) for SVR on the masked features by cross-validated MAE.
inline HyperGenome tune_svr(const EncodedDataset& data, const Mask& mask,
                            const GAConfig& config, const FoldPlan& plan,
                            const RegressorSpec& base_spec,
                            const HyperBounds& bounds = {},
                            const CvOptions& cv_options = {}) {
  if (mask.count() == 0) throw DataError("tune_svr: empty mask");
  return tune_svr_with_fitness(config, bounds, [&](const HyperGenome& genome) {
    RegressorSpec spec = base_spec;
    spec.kind = ModelKind::svr;
    spec.hyperparams["c"] = genome.c;
    spec.hyperparams["gamma"] = genome.gamma;
    return cross_validate(data, mask, spec, plan, cv_options).mae;
  });
}

}  // namespace attribforge
