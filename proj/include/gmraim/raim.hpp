#pragma once

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "gmraim/geo.hpp"
#include "gmraim/positioning.hpp"
#include "gmraim/subsets.hpp"

namespace gmraim {

enum class ExclusionRule { kVote, kIntersection };

struct RaimParams {
  double n_lambda = 3.0;
  /// Flag d_l > Lambda; when false, d_l >= Lambda.
  bool strict = true;
  ExclusionRule exclusion = ExclusionRule::kVote;

  void validate() const;
};

/// Per-axis inverse-sigma weighted mean of the components.
LocalPoint fuse(std::span<const PositionEstimate> estimates);

std::vector<double> deviations(std::span<const PositionEstimate> estimates, const LocalPoint& fused);

struct DeviationStats {
  double mean = 0.0;
  double sd = 0.0;  // population
  double max = 0.0;
};

DeviationStats deviation_stats(std::span<const double> ds);

/// mean(ds) + n_lambda * population sd(ds)
double threshold(std::span<const double> ds, const RaimParams& params);

std::vector<std::size_t> flag_subsets(std::span<const double> ds, double lambda, bool strict = true);

std::set<ApId> exclude_intersection(const std::vector<std::vector<ApId>>& flagged);

/// AP j is rogue iff it appears in more flagged than unflagged subsets.
std::set<ApId> exclude_vote(const std::vector<std::vector<ApId>>& subsets, std::span<const std::size_t> flagged);

/// Bit i set <=> the i-th sorted AP of the scan is a member.
using SubsetMask = std::uint32_t;
constexpr std::size_t kMaxScanAps = 32;

SubsetMask to_mask(const IndexSubset& subset);
IndexSubset from_mask(SubsetMask mask);

/// Everything about one timestamp that does not depend on n_lambda.
struct TimestepMixture {
  std::int64_t t = 0;
  std::vector<ApId> aps;               // sorted AP ids heard at t
  std::vector<SubsetMask> subsets;     // subsets that produced an estimate
  std::vector<PositionEstimate> estimates;
  std::vector<SubsetMask> failed;      // subsets whose positioning threw
  LocalPoint fused;
  std::vector<double> deviations;
  DeviationStats stats;

  std::vector<ApId> subset_ids(std::size_t l) const;
};

TimestepMixture build_mixture(const Scan& scan, const SubsetSolver& solver, const SubsetPlan& plan);
TimestepMixture build_mixture(const Scan& scan, const PositioningBackend& backend, const SubsetPlan& plan);

struct TimestepVerdict {
  std::int64_t t = 0;
  LocalPoint fused;
  std::vector<double> deviations;
  double lambda = 0.0;
  std::vector<std::size_t> flagged;
  bool alarm = false;
  std::set<ApId> rogue;
  std::optional<PositionEstimate> recovered;
  std::size_t failed_subsets = 0;
};

/// Threshold, flag and exclude. Leaves `recovered` empty.
TimestepVerdict decide(const TimestepMixture& mixture, const RaimParams& params);

/// True iff the verdict at `n_lambda` would raise an alarm; same arithmetic as decide().
bool alarms_at(const TimestepMixture& mixture, double n_lambda, bool strict = true);

/// Position from the scan's APs minus `excluded`, or nullopt when fewer than
/// min_size remain or positioning fails.
std::optional<PositionEstimate> recover_position(const Scan& scan, const SubsetSolver& solver,
                                                 const std::set<ApId>& excluded, const SubsetPlan& plan);

TimestepVerdict detect_timestep(const Scan& scan, const PositioningBackend& backend, const SubsetPlan& plan,
                                const RaimParams& params);

}  // namespace gmraim
