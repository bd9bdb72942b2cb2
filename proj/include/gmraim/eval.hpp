#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gmraim/attack.hpp"
#include "gmraim/baselines.hpp"
#include "gmraim/positioning.hpp"
#include "gmraim/raim.hpp"

namespace gmraim {

enum class Method { kGmRaim, kClustering, kEcod };

const char* to_string(Method method);
Method method_from_string(const std::string& name);

/// One detector's output on one trace, re-evaluable at any knob value.
class TraceAnalysis {
 public:
  virtual ~TraceAnalysis() = default;
  virtual std::size_t size() const = 0;
  virtual bool alarm(std::size_t i, double knob) const = 0;
  virtual bool supports_exclusion() const { return false; }
  virtual std::set<ApId> rogue(std::size_t, double) const { return {}; }
  /// Knob value beyond which the detector can no longer alarm on this trace.
  virtual double knob_ceiling() const = 0;
};

/// Full-enumeration positioning for one scan; subsampling reuses it.
struct ScanEstimates {
  std::int64_t t = 0;
  std::vector<ApId> aps;
  std::vector<IndexSubset> subsets;
  std::vector<std::optional<PositionEstimate>> estimates;
  std::optional<PositionEstimate> unfiltered;  // all heard APs
};

/// Nullopt when the scan has fewer than min_size APs.
std::optional<ScanEstimates> estimate_scan(const Scan& scan, const PositioningBackend& backend,
                                           const SubsetPlan& plan, bool all_subsets);

/// Mixture over the subsets `plan` samples out of the cached estimates.
std::optional<TimestepMixture> mixture_from(const ScanEstimates& cached, const SubsetPlan& plan);

class RaimAnalysis final : public TraceAnalysis {
 public:
  RaimAnalysis(std::vector<std::optional<TimestepMixture>> mixtures, RaimParams params,
               std::vector<std::optional<PositionEstimate>> unfiltered);

  std::size_t size() const override { return mixtures_.size(); }
  bool alarm(std::size_t i, double n_lambda) const override;
  bool supports_exclusion() const override { return true; }
  std::set<ApId> rogue(std::size_t i, double n_lambda) const override;
  double knob_ceiling() const override;

  const std::optional<TimestepMixture>& mixture(std::size_t i) const { return mixtures_[i]; }
  const std::optional<PositionEstimate>& unfiltered(std::size_t i) const { return unfiltered_[i]; }
  std::optional<TimestepVerdict> verdict(std::size_t i, double n_lambda) const;

 private:
  std::vector<std::optional<TimestepMixture>> mixtures_;
  RaimParams params_;
  std::vector<std::optional<PositionEstimate>> unfiltered_;
};

class ClusteringTraceAnalysis final : public TraceAnalysis {
 public:
  explicit ClusteringTraceAnalysis(ClusteringAnalysis analysis) : analysis_(std::move(analysis)) {}
  std::size_t size() const override { return analysis_.entries.size(); }
  bool alarm(std::size_t i, double theta) const override { return analysis_.alarm(i, theta); }
  double knob_ceiling() const override;
  const ClusteringAnalysis& analysis() const { return analysis_; }

 private:
  ClusteringAnalysis analysis_;
};

class EcodTraceAnalysis final : public TraceAnalysis {
 public:
  explicit EcodTraceAnalysis(std::vector<double> scores) : scores_(std::move(scores)) {}
  std::size_t size() const override { return scores_.size(); }
  bool alarm(std::size_t i, double threshold) const override { return scores_[i] > threshold; }
  double knob_ceiling() const override;
  const std::vector<double>& scores() const { return scores_; }

 private:
  std::vector<double> scores_;
};

struct DetectorSetup {
  const PositioningBackend* backend = nullptr;
  SubsetPlan plan;
  RaimParams raim;
  ClusteringParams clustering;
  EcodParams ecod;
};

std::unique_ptr<RaimAnalysis> analyze_raim(const Trace& trace, const PositioningBackend& backend,
                                           const SubsetPlan& plan, const RaimParams& params);
std::unique_ptr<TraceAnalysis> analyze(Method method, const Trace& trace, const DetectorSetup& setup);

/// Knob interval searched by calibrate(); `most_sensitive` is the declared
/// direction, checked empirically.
struct KnobRange {
  double most_sensitive = 0.0;
  double least_sensitive = 10.0;
};

KnobRange knob_range(Method method, std::span<const TraceAnalysis* const> analyses);

/// Binary search for the most sensitive knob whose benign alarm fraction
/// stays at or below `target`. Throws NonMonotoneDetector when the observed
/// fractions are not monotone along the search.
double calibrate(const std::function<double(double)>& benign_alarm_fraction, KnobRange range, double target,
                 int iterations = 64);

struct LabeledRun {
  const TraceAnalysis* analysis = nullptr;
  const std::vector<AttackLabel>* labels = nullptr;
};

/// Minimum number of benign timestamps calibrate_runs() accepts.
constexpr std::size_t kMinBenignTimestamps = 100;

/// Fraction of unlabelled (benign) timestamps that alarm at `knob`.
double benign_alarm_fraction(std::span<const LabeledRun> runs, double knob);
std::size_t benign_count(std::span<const LabeledRun> runs);

double calibrate_runs(std::span<const LabeledRun> benign_pool, KnobRange range, double target);

struct RocPoint {
  double target_fpr = 0.0;
  double achieved_fpr = 0.0;
  double tpr_detect = 0.0;
  std::optional<double> tpr_exclude;
  double knob = 0.0;
  /// Mean count of legitimate APs voted out per detected active timestamp.
  std::optional<double> over_exclusion;
};

struct RateCounts {
  std::size_t active = 0;
  std::size_t detected = 0;
  std::size_t excluded = 0;
  std::size_t over_excluded = 0;
};

RateCounts count_rates(std::span<const LabeledRun> attack_runs, double knob);

std::vector<RocPoint> evaluate_detection(std::span<const LabeledRun> attack_runs,
                                         std::span<const LabeledRun> benign_pool, KnobRange range,
                                         std::span<const double> targets);

/// Detection rate over active labels from explicit alarms.
double detection_rate(std::span<const bool> alarms, std::span<const AttackLabel> labels);

/// Exclusion TP at an active timestamp: alarm raised and every true rogue AP voted out.
double evaluate_exclusion(std::span<const TimestepVerdict> verdicts, std::span<const AttackLabel> labels);

struct RecoveryReport {
  double rmse_before = 0.0;
  double rmse_after = 0.0;
  std::vector<std::int64_t> t;
  std::vector<double> before_errors;
  std::vector<double> after_errors;
};

/// Horizontal errors against ground truth over active timestamps. `before`
/// holds all-AP positions; `after` falls back to `before` where no recovered
/// position exists.
RecoveryReport evaluate_recovery(std::span<const std::optional<TimestepVerdict>> verdicts,
                                 std::span<const std::optional<PositionEstimate>> before, const Trace& trace,
                                 std::span<const AttackLabel> labels, const GeoPoint& origin);

/// Verdicts with recovered positions for every scan of `trace` at `n_lambda`.
std::vector<std::optional<TimestepVerdict>> recover_trace(const RaimAnalysis& analysis, const Trace& trace,
                                                          const PositioningBackend& backend,
                                                          const SubsetPlan& plan, double n_lambda);

struct SweepReplicate {
  const PositioningBackend* backend = nullptr;
  std::vector<const Trace*> attacked;
  std::vector<const std::vector<AttackLabel>*> labels;
  std::vector<const Trace*> benign;
  std::uint64_t seed = 0;
};

struct SamplingRow {
  double ratio = 1.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  RocPoint point;
};

/// Detection P_TP vs sampling ratio. Full-enumeration estimates are computed
/// once per scan and subsampled per ratio, so every ratio sees the same
/// positioning results.
std::vector<SamplingRow> sampling_sweep(std::span<const SweepReplicate> replicates, const SubsetPlan& plan,
                                        const RaimParams& params, std::span<const double> ratios,
                                        double target_fpr, int workers);

std::vector<double> default_fpr_targets();

}  // namespace gmraim
