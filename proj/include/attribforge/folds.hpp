#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "attribforge/errors.hpp"
#include "attribforge/rng.hpp"

namespace attribforge {

// Assignment of each of m rows to one of k folds. A plan is a pure function
// of (m, k, seed); one plan is frozen per GA run so that fitness values stay
// comparable across masks.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kFoldStream = 0x666f6c6473ULL;  // "folds"

inline FoldPlan make_folds(std::size_t m, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DataError("make_folds: k must be at least 2");
  if (k > m) throw DataError("make_folds: k exceeds the number of rows");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kFoldStream));
  rng.shuffle(order);

  // The first m % k folds take the extra row; sizes differ by at most 1.
  FoldPlan plan{k, std::vector<std::size_t>(m), seed};
  const std::size_t base = m / k;
  const std::size_t extra = m % k;
  std::size_t cursor = 0;
  for (std::size_t fold = 0; fold < k; ++fold) {
    const std::size_t size = base + (fold < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) plan.assignments[order[cursor++]] = fold;
  }
  return plan;
}

}  // namespace attribforge
