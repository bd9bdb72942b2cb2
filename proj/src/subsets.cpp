#include "gmraim/subsets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gmraim/error.hpp"
#include "gmraim/rng.hpp"

namespace gmraim {

void SubsetPlan::validate() const {
  if (min_size < 3) throw Error(ErrorCode::kInvalidConfig, "plan.min_size must be >= 3");
  if (max_size != 0 && max_size < min_size) {
    throw Error(ErrorCode::kInvalidConfig, "plan.max_size must be >= min_size (or 0 for all)");
  }
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "plan.sampling_ratio must lie in (0, 1]");
  }
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<IndexSubset> enumerate_indices(std::size_t n, const SubsetPlan& plan) {
  plan.validate();
  const std::size_t lo = static_cast<std::size_t>(plan.min_size);
  if (n < lo) {
    throw Error(ErrorCode::kTooFewAps,
                std::to_string(n) + " APs, subsets need at least " + std::to_string(lo));
  }
  const std::size_t hi = plan.max_size == 0 ? n : std::min<std::size_t>(plan.max_size, n);
  std::vector<IndexSubset> out;
  for (std::size_t k = lo; k <= hi; ++k) {
    IndexSubset combo(k);
    std::iota(combo.begin(), combo.end(), 0);
    while (true) {
      out.push_back(combo);
      // Advance to the next combination in lexicographic order.
      std::size_t i = k;
      while (i > 0 && combo[i - 1] == n - k + (i - 1)) --i;
      if (i == 0) break;
      ++combo[i - 1];
      for (std::size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
    }
  }
  return out;
}

std::vector<std::vector<ApId>> enumerate(const std::set<ApId>& aps, const SubsetPlan& plan) {
  const std::vector<ApId> sorted(aps.begin(), aps.end());
  std::vector<std::vector<ApId>> out;
  for (const auto& idx : enumerate_indices(sorted.size(), plan)) {
    std::vector<ApId> s;
    s.reserve(idx.size());
    for (std::size_t i : idx) s.push_back(sorted[i]);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

template <typename Subset>
std::vector<std::size_t> sample_by_size(const std::vector<Subset>& subsets, const SubsetPlan& plan,
                                        std::uint64_t stream) {
  plan.validate();
  const std::size_t total = subsets.size();
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), 0);
  if (plan.sampling_ratio >= 1.0 || total == 0) return all;

  const auto wanted = static_cast<std::size_t>(std::ceil(plan.sampling_ratio * static_cast<double>(total) - 1e-9));
  Rng rng(mix_seed(plan.rng_seed, stream));

  std::map<std::size_t, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < total; ++i) classes[subsets[i].size()].push_back(i);

  std::vector<bool> chosen(total, false);
  std::size_t count = 0;
  for (const auto& [size, members] : classes) {
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng);
    chosen[members[pick]] = true;
    ++count;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < total; ++i) {
    if (!chosen[i]) rest.push_back(i);
  }
  // Partial Fisher-Yates over the unchosen remainder.
  for (std::size_t i = 0; count < wanted && i < rest.size(); ++i, ++count) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, rest.size() - 1)(rng);
    std::swap(rest[i], rest[j]);
    chosen[rest[i]] = true;
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < total; ++i) {
    if (chosen[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> sample_positions(const std::vector<IndexSubset>& subsets, const SubsetPlan& plan,
                                          std::uint64_t stream) {
  return sample_by_size(subsets, plan, stream);
}

template <typename Subset>
std::vector<Subset> sample(const std::vector<Subset>& subsets, const SubsetPlan& plan, std::uint64_t stream) {
  std::vector<Subset> out;
  for (std::size_t i : sample_by_size(subsets, plan, stream)) out.push_back(subsets[i]);
  return out;
}

template std::vector<IndexSubset> sample(const std::vector<IndexSubset>&, const SubsetPlan&, std::uint64_t);
template std::vector<std::vector<ApId>> sample(const std::vector<std::vector<ApId>>&, const SubsetPlan&,
                                               std::uint64_t);

}  // namespace gmraim
