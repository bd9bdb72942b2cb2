#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "gmraim/geo.hpp"

namespace gmraim {

struct SubsetPlan {
  int min_size = 3;
  /// 0 means "all APs in the scan".
  int max_size = 0;
  double sampling_ratio = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Positions 0..n-1 into a sorted AP list.
using IndexSubset = std::vector<std::size_t>;

/// All size-k combinations of {0..n-1} for k = min_size..min(max_size, n),
/// size class by size class, each in lexicographic order.
std::vector<IndexSubset> enumerate_indices(std::size_t n, const SubsetPlan& plan);

std::vector<std::vector<ApId>> enumerate(const std::set<ApId>& aps, const SubsetPlan& plan);

/// Seeded uniform choice of ceil(r L) subsets without replacement that keeps
/// at least one subset of every size class. Returns positions into `subsets`
/// in ascending order. `stream` decorrelates draws (e.g. the time index).
std::vector<std::size_t> sample_positions(const std::vector<IndexSubset>& subsets, const SubsetPlan& plan,
                                          std::uint64_t stream = 0);

template <typename Subset>
std::vector<Subset> sample(const std::vector<Subset>& subsets, const SubsetPlan& plan,
                           std::uint64_t stream = 0);

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

}  // namespace gmraim
