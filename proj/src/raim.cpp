#include "gmraim/raim.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>

#include "gmraim/error.hpp"

namespace gmraim {

void RaimParams::validate() const {
  if (!(n_lambda >= 0.0) || !std::isfinite(n_lambda)) {
    throw Error(ErrorCode::kInvalidConfig, "raim.n_lambda must be finite and >= 0");
  }
}

LocalPoint fuse(std::span<const PositionEstimate> estimates) {
  if (estimates.empty()) throw Error(ErrorCode::kEmptyMixture, "cannot fuse an empty mixture");
  LocalPoint num, den;
  for (const auto& e : estimates) {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      num[axis] += e.position[axis] / e.sigma[axis];
      den[axis] += 1.0 / e.sigma[axis];
    }
  }
  return {num.east / den.east, num.north / den.north, num.up / den.up};
}

std::vector<double> deviations(std::span<const PositionEstimate> estimates, const LocalPoint& fused) {
  std::vector<double> ds;
  ds.reserve(estimates.size());
  for (const auto& e : estimates) ds.push_back((e.position - fused).norm());
  return ds;
}

DeviationStats deviation_stats(std::span<const double> ds) {
  DeviationStats s;
  if (ds.empty()) return s;
  double sum = 0.0;
  s.max = ds.front();
  for (double d : ds) {
    sum += d;
    s.max = std::max(s.max, d);
  }
  s.mean = sum / static_cast<double>(ds.size());
  double var = 0.0;
  for (double d : ds) var += (d - s.mean) * (d - s.mean);
  s.sd = std::sqrt(var / static_cast<double>(ds.size()));
  return s;
}

namespace {

double lambda_from(const DeviationStats& s, double n_lambda) { return s.mean + n_lambda * s.sd; }

}  // namespace

double threshold(std::span<const double> ds, const RaimParams& params) {
  return lambda_from(deviation_stats(ds), params.n_lambda);
}

std::vector<std::size_t> flag_subsets(std::span<const double> ds, double lambda, bool strict) {
  std::vector<std::size_t> flagged;
  for (std::size_t l = 0; l < ds.size(); ++l) {
    if (strict ? ds[l] > lambda : ds[l] >= lambda) flagged.push_back(l);
  }
  return flagged;
}

std::set<ApId> exclude_intersection(const std::vector<std::vector<ApId>>& flagged) {
  if (flagged.empty()) return {};
  std::set<ApId> common(flagged.front().begin(), flagged.front().end());
  for (std::size_t l = 1; l < flagged.size() && !common.empty(); ++l) {
    const std::set<ApId> s(flagged[l].begin(), flagged[l].end());
    std::set<ApId> next;
    std::set_intersection(common.begin(), common.end(), s.begin(), s.end(), std::inserter(next, next.end()));
    common = std::move(next);
  }
  return common;
}

std::set<ApId> exclude_vote(const std::vector<std::vector<ApId>>& subsets, std::span<const std::size_t> flagged) {
  std::vector<bool> is_flagged(subsets.size(), false);
  for (std::size_t l : flagged) is_flagged.at(l) = true;
  std::map<ApId, std::pair<std::size_t, std::size_t>> votes;  // (A, B)
  for (std::size_t l = 0; l < subsets.size(); ++l) {
    for (const auto& ap : subsets[l]) {
      auto& v = votes[ap];
      (is_flagged[l] ? v.first : v.second) += 1;
    }
  }
  std::set<ApId> rogue;
  for (const auto& [ap, v] : votes) {
    if (v.first > v.second) rogue.insert(ap);
  }
  return rogue;
}

SubsetMask to_mask(const IndexSubset& subset) {
  SubsetMask mask = 0;
  for (std::size_t i : subset) mask |= SubsetMask{1} << i;
  return mask;
}

IndexSubset from_mask(SubsetMask mask) {
  IndexSubset out;
  for (std::size_t i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1u) out.push_back(i);
  }
  return out;
}

std::vector<ApId> TimestepMixture::subset_ids(std::size_t l) const {
  std::vector<ApId> ids;
  for (std::size_t i : from_mask(subsets[l])) ids.push_back(aps[i]);
  return ids;
}

TimestepMixture build_mixture(const Scan& scan, const SubsetSolver& solver, const SubsetPlan& plan) {
  TimestepMixture m;
  m.t = scan.t;
  if (scan.rssi.size() > kMaxScanAps) {
    throw Error(ErrorCode::kInvalidField, "t=" + std::to_string(scan.t) + ": more than 32 APs in one scan");
  }
  for (const auto& [ap, rss] : scan.rssi) m.aps.push_back(ap);
  const auto all = enumerate_indices(m.aps.size(), plan);
  const auto chosen = sample_positions(all, plan, static_cast<std::uint64_t>(scan.t));
  m.subsets.reserve(chosen.size());
  m.estimates.reserve(chosen.size());
  for (std::size_t pos : chosen) {
    try {
      PositionEstimate e = solver.locate(all[pos]);
      if (!e.valid()) throw Error(ErrorCode::kInvalidField, "invalid estimate");
      m.estimates.push_back(e);
      m.subsets.push_back(to_mask(all[pos]));
    } catch (const Error&) {
      m.failed.push_back(to_mask(all[pos]));
    }
  }
  if (m.estimates.empty()) {
    throw Error(ErrorCode::kAllSubsetsFailed, "t=" + std::to_string(scan.t) + ": every subset failed to position");
  }
  m.fused = fuse(m.estimates);
  m.deviations = deviations(m.estimates, m.fused);
  m.stats = deviation_stats(m.deviations);
  return m;
}

TimestepMixture build_mixture(const Scan& scan, const PositioningBackend& backend, const SubsetPlan& plan) {
  if (scan.rssi.size() < static_cast<std::size_t>(plan.min_size)) {
    throw Error(ErrorCode::kTooFewAps, "t=" + std::to_string(scan.t) + ": " + std::to_string(scan.rssi.size()) +
                                           " APs, need " + std::to_string(plan.min_size));
  }
  return build_mixture(scan, *backend.bind(scan), plan);
}

bool alarms_at(const TimestepMixture& mixture, double n_lambda, bool strict) {
  const double lambda = lambda_from(mixture.stats, n_lambda);
  return strict ? mixture.stats.max > lambda : mixture.stats.max >= lambda;
}

TimestepVerdict decide(const TimestepMixture& mixture, const RaimParams& params) {
  params.validate();
  TimestepVerdict v;
  v.t = mixture.t;
  v.fused = mixture.fused;
  v.deviations = mixture.deviations;
  v.lambda = lambda_from(mixture.stats, params.n_lambda);
  v.flagged = flag_subsets(v.deviations, v.lambda, params.strict);
  v.alarm = !v.flagged.empty();
  v.failed_subsets = mixture.failed.size();
  // Mask arithmetic equivalent to exclude_intersection / exclude_vote.
  if (params.exclusion == ExclusionRule::kIntersection) {
    if (!v.flagged.empty()) {
      SubsetMask common = ~SubsetMask{0};
      for (std::size_t l : v.flagged) common &= mixture.subsets[l];
      for (std::size_t i : from_mask(common)) {
        if (i < mixture.aps.size()) v.rogue.insert(mixture.aps[i]);
      }
    }
  } else {
    std::vector<bool> is_flagged(mixture.subsets.size(), false);
    for (std::size_t l : v.flagged) is_flagged[l] = true;
    for (std::size_t i = 0; i < mixture.aps.size(); ++i) {
      const SubsetMask bit = SubsetMask{1} << i;
      std::size_t in_flagged = 0, in_benign = 0;
      for (std::size_t l = 0; l < mixture.subsets.size(); ++l) {
        if (mixture.subsets[l] & bit) ++(is_flagged[l] ? in_flagged : in_benign);
      }
      if (in_flagged > in_benign) v.rogue.insert(mixture.aps[i]);
    }
  }
  return v;
}

std::optional<PositionEstimate> recover_position(const Scan& scan, const SubsetSolver& solver,
                                                 const std::set<ApId>& excluded, const SubsetPlan& plan) {
  IndexSubset remaining;
  std::size_t i = 0;
  for (const auto& [ap, rss] : scan.rssi) {
    if (!excluded.count(ap)) remaining.push_back(i);
    ++i;
  }
  if (remaining.size() < static_cast<std::size_t>(plan.min_size)) return std::nullopt;
  try {
    return solver.locate(remaining);
  } catch (const Error&) {
    return std::nullopt;
  }
}

TimestepVerdict detect_timestep(const Scan& scan, const PositioningBackend& backend, const SubsetPlan& plan,
                                const RaimParams& params) {
  if (scan.rssi.size() < static_cast<std::size_t>(plan.min_size)) {
    throw Error(ErrorCode::kTooFewAps, "t=" + std::to_string(scan.t) + ": " + std::to_string(scan.rssi.size()) +
                                           " APs, need " + std::to_string(plan.min_size));
  }
  const auto solver = backend.bind(scan);
  const auto mixture = build_mixture(scan, *solver, plan);
  TimestepVerdict v = decide(mixture, params);
  v.recovered = recover_position(scan, *solver, v.rogue, plan);
  return v;
}

}  // namespace gmraim
