#include "gmraim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "gmraim/error.hpp"
#include "gmraim/parallel.hpp"
#include "gmraim/rng.hpp"

namespace gmraim {

const char* to_string(Method method) {
  switch (method) {
    case Method::kGmRaim: return "gm_raim";
    case Method::kClustering: return "clustering";
    case Method::kEcod: return "ecod";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "gm_raim") return Method::kGmRaim;
  if (name == "clustering") return Method::kClustering;
  if (name == "ecod") return Method::kEcod;
  throw Error(ErrorCode::kInvalidConfig, "unknown detector '" + name + "'");
}

std::vector<double> default_fpr_targets() {
  std::vector<double> t;
  for (int i = 1; i <= 10; ++i) t.push_back(i / 100.0);
  return t;
}

std::optional<ScanEstimates> estimate_scan(const Scan& scan, const PositioningBackend& backend,
                                           const SubsetPlan& plan, bool all_subsets) {
  if (scan.rssi.size() < static_cast<std::size_t>(plan.min_size)) return std::nullopt;
  if (scan.rssi.size() > kMaxScanAps) {
    throw Error(ErrorCode::kInvalidField, "t=" + std::to_string(scan.t) + ": more than 32 APs in one scan");
  }
  const auto solver = backend.bind(scan);
  ScanEstimates out;
  out.t = scan.t;
  for (const auto& [ap, rss] : scan.rssi) out.aps.push_back(ap);
  auto all = enumerate_indices(out.aps.size(), plan);
  if (!all_subsets) {
    std::vector<IndexSubset> chosen;
    for (std::size_t pos : sample_positions(all, plan, static_cast<std::uint64_t>(scan.t))) {
      chosen.push_back(std::move(all[pos]));
    }
    all = std::move(chosen);
  }
  out.estimates.reserve(all.size());
  for (const auto& subset : all) {
    try {
      PositionEstimate e = solver->locate(subset);
      out.estimates.push_back(e.valid() ? std::optional(e) : std::nullopt);
    } catch (const Error&) {
      out.estimates.emplace_back();
    }
  }
  out.subsets = std::move(all);
  out.unfiltered = recover_position(scan, *solver, {}, plan);
  return out;
}

namespace {

std::optional<TimestepMixture> mixture_over(const ScanEstimates& cached, std::span<const std::size_t> positions) {
  TimestepMixture m;
  m.t = cached.t;
  m.aps = cached.aps;
  for (std::size_t pos : positions) {
    if (cached.estimates[pos]) {
      m.subsets.push_back(to_mask(cached.subsets[pos]));
      m.estimates.push_back(*cached.estimates[pos]);
    } else {
      m.failed.push_back(to_mask(cached.subsets[pos]));
    }
  }
  if (m.estimates.empty()) return std::nullopt;
  m.fused = fuse(m.estimates);
  m.deviations = deviations(m.estimates, m.fused);
  m.stats = deviation_stats(m.deviations);
  return m;
}

}  // namespace

std::optional<TimestepMixture> mixture_from(const ScanEstimates& cached, const SubsetPlan& plan) {
  const auto positions = sample_positions(cached.subsets, plan, static_cast<std::uint64_t>(cached.t));
  return mixture_over(cached, positions);
}

RaimAnalysis::RaimAnalysis(std::vector<std::optional<TimestepMixture>> mixtures, RaimParams params,
                           std::vector<std::optional<PositionEstimate>> unfiltered)
    : mixtures_(std::move(mixtures)), params_(params), unfiltered_(std::move(unfiltered)) {
  unfiltered_.resize(mixtures_.size());
}

bool RaimAnalysis::alarm(std::size_t i, double n_lambda) const {
  return mixtures_[i] && alarms_at(*mixtures_[i], n_lambda, params_.strict);
}

std::optional<TimestepVerdict> RaimAnalysis::verdict(std::size_t i, double n_lambda) const {
  if (!mixtures_[i]) return std::nullopt;
  RaimParams p = params_;
  p.n_lambda = n_lambda;
  return decide(*mixtures_[i], p);
}

std::set<ApId> RaimAnalysis::rogue(std::size_t i, double n_lambda) const {
  auto v = verdict(i, n_lambda);
  return v ? v->rogue : std::set<ApId>{};
}

double RaimAnalysis::knob_ceiling() const {
  double ceiling = 0.0;
  for (const auto& m : mixtures_) {
    if (m && m->stats.sd > 0.0) ceiling = std::max(ceiling, (m->stats.max - m->stats.mean) / m->stats.sd);
  }
  return ceiling;
}

double ClusteringTraceAnalysis::knob_ceiling() const {
  double ceiling = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double s = analysis_.score(i);
    if (std::isfinite(s)) ceiling = std::max(ceiling, s);
  }
  return ceiling;
}

double EcodTraceAnalysis::knob_ceiling() const {
  double ceiling = 0.0;
  for (double s : scores_) ceiling = std::max(ceiling, s);
  return ceiling;
}

std::unique_ptr<RaimAnalysis> analyze_raim(const Trace& trace, const PositioningBackend& backend,
                                           const SubsetPlan& plan, const RaimParams& params) {
  params.validate();
  std::vector<std::optional<TimestepMixture>> mixtures;
  std::vector<std::optional<PositionEstimate>> unfiltered;
  mixtures.reserve(trace.size());
  unfiltered.reserve(trace.size());
  for (const auto& scan : trace) {
    auto cached = estimate_scan(scan, backend, plan, false);
    if (!cached) {
      mixtures.emplace_back();
      unfiltered.emplace_back();
      continue;
    }
    std::vector<std::size_t> positions(cached->subsets.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    mixtures.push_back(mixture_over(*cached, positions));
    unfiltered.push_back(cached->unfiltered);
  }
  return std::make_unique<RaimAnalysis>(std::move(mixtures), params, std::move(unfiltered));
}

std::unique_ptr<TraceAnalysis> analyze(Method method, const Trace& trace, const DetectorSetup& setup) {
  switch (method) {
    case Method::kGmRaim:
      if (!setup.backend) throw Error(ErrorCode::kInvalidConfig, "gm_raim needs a positioning backend");
      return analyze_raim(trace, *setup.backend, setup.plan, setup.raim);
    case Method::kClustering:
      return std::make_unique<ClusteringTraceAnalysis>(analyze_clustering(trace, setup.clustering));
    case Method::kEcod:
      setup.ecod.validate();
      return std::make_unique<EcodTraceAnalysis>(ecod_trace_scores(trace, setup.ecod));
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown detector");
}

KnobRange knob_range(Method method, std::span<const TraceAnalysis* const> analyses) {
  if (method == Method::kGmRaim) return {0.0, 10.0};
  double ceiling = 0.0;
  for (const auto* a : analyses) ceiling = std::max(ceiling, a->knob_ceiling());
  return {0.0, ceiling + 1.0};
}

double calibrate(const std::function<double(double)>& benign_alarm_fraction, KnobRange range, double target,
                 int iterations) {
  double sensitive = range.most_sensitive;
  double insensitive = range.least_sensitive;
  double f_sensitive = benign_alarm_fraction(sensitive);
  double f_insensitive = benign_alarm_fraction(insensitive);
  if (f_insensitive > f_sensitive) {
    // The detector alarms more at the other end: follow what it actually does.
    std::swap(sensitive, insensitive);
    std::swap(f_sensitive, f_insensitive);
  }
  if (f_sensitive <= target) return sensitive;
  if (f_insensitive > target) return insensitive;

  // Observed (knob, fraction) pairs; fractions must fall moving away from `sensitive`.
  std::vector<std::pair<double, double>> seen{{sensitive, f_sensitive}, {insensitive, f_insensitive}};
  const bool rising = insensitive > sensitive;
  auto check_monotone = [&] {
    auto sorted = seen;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      const double step = sorted[i].second - sorted[i - 1].second;
      if (rising ? step > 0.0 : step < 0.0) {
        throw Error(ErrorCode::kNonMonotoneDetector, "benign alarm fraction is not monotone in the knob");
      }
    }
  };
  double infeasible = sensitive;
  double feasible = insensitive;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (infeasible + feasible);
    if (mid == infeasible || mid == feasible) break;
    const double f = benign_alarm_fraction(mid);
    seen.emplace_back(mid, f);
    check_monotone();
    (f <= target ? feasible : infeasible) = mid;
  }
  return feasible;
}

std::size_t benign_count(std::span<const LabeledRun> runs) {
  std::size_t n = 0;
  for (const auto& run : runs) {
    for (const auto& label : *run.labels) n += label.active ? 0 : 1;
  }
  return n;
}

double benign_alarm_fraction(std::span<const LabeledRun> runs, double knob) {
  std::size_t benign = 0, alarms = 0;
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.labels->size(); ++i) {
      if ((*run.labels)[i].active) continue;
      ++benign;
      alarms += run.analysis->alarm(i, knob) ? 1 : 0;
    }
  }
  return benign == 0 ? 0.0 : static_cast<double>(alarms) / static_cast<double>(benign);
}

double calibrate_runs(std::span<const LabeledRun> benign_pool, KnobRange range, double target) {
  const std::size_t n = benign_count(benign_pool);
  if (n < kMinBenignTimestamps) {
    throw Error(ErrorCode::kInvalidConfig, "calibration needs at least " + std::to_string(kMinBenignTimestamps) +
                                               " benign timestamps, got " + std::to_string(n));
  }
  return calibrate([&](double knob) { return benign_alarm_fraction(benign_pool, knob); }, range, target);
}

RateCounts count_rates(std::span<const LabeledRun> attack_runs, double knob) {
  RateCounts c;
  for (const auto& run : attack_runs) {
    for (std::size_t i = 0; i < run.labels->size(); ++i) {
      const auto& label = (*run.labels)[i];
      if (!label.active) continue;
      ++c.active;
      if (!run.analysis->alarm(i, knob)) continue;
      ++c.detected;
      if (!run.analysis->supports_exclusion()) continue;
      const auto voted = run.analysis->rogue(i, knob);
      const bool all_found = std::all_of(label.rogue_aps.begin(), label.rogue_aps.end(),
                                         [&](const ApId& ap) { return voted.count(ap) != 0; });
      c.excluded += all_found ? 1 : 0;
      for (const auto& ap : voted) c.over_excluded += label.rogue_aps.count(ap) ? 0 : 1;
    }
  }
  return c;
}

std::vector<RocPoint> evaluate_detection(std::span<const LabeledRun> attack_runs,
                                         std::span<const LabeledRun> benign_pool, KnobRange range,
                                         std::span<const double> targets) {
  const bool exclusion = !attack_runs.empty() && attack_runs.front().analysis->supports_exclusion();
  std::vector<RocPoint> out;
  for (double target : targets) {
    RocPoint p;
    p.target_fpr = target;
    p.knob = calibrate_runs(benign_pool, range, target);
    p.achieved_fpr = benign_alarm_fraction(benign_pool, p.knob);
    const auto c = count_rates(attack_runs, p.knob);
    const double active = static_cast<double>(std::max<std::size_t>(c.active, 1));
    p.tpr_detect = static_cast<double>(c.detected) / active;
    if (exclusion) {
      p.tpr_exclude = static_cast<double>(c.excluded) / active;
      p.over_exclusion = c.detected == 0 ? 0.0 : static_cast<double>(c.over_excluded) / c.detected;
    }
    out.push_back(p);
  }
  return out;
}

double detection_rate(std::span<const bool> alarms, std::span<const AttackLabel> labels) {
  std::size_t active = 0, hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].active) continue;
    ++active;
    hit += alarms[i] ? 1 : 0;
  }
  return active == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(active);
}

double evaluate_exclusion(std::span<const TimestepVerdict> verdicts, std::span<const AttackLabel> labels) {
  std::size_t active = 0, tp = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].active) continue;
    ++active;
    const auto& v = verdicts[i];
    if (!v.alarm) continue;
    const bool all_found = std::all_of(labels[i].rogue_aps.begin(), labels[i].rogue_aps.end(),
                                       [&](const ApId& ap) { return v.rogue.count(ap) != 0; });
    tp += all_found ? 1 : 0;
  }
  return active == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(active);
}

RecoveryReport evaluate_recovery(std::span<const std::optional<TimestepVerdict>> verdicts,
                                 std::span<const std::optional<PositionEstimate>> before, const Trace& trace,
                                 std::span<const AttackLabel> labels, const GeoPoint& origin) {
  RecoveryReport r;
  double sum_before = 0.0, sum_after = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (!labels[i].active || !trace[i].truth || !before[i]) continue;
    const LocalPoint truth = to_local(*trace[i].truth, origin);
    const double e_before = (before[i]->position - truth).horizontal_norm();
    double e_after = e_before;
    if (verdicts[i] && verdicts[i]->recovered) e_after = (verdicts[i]->recovered->position - truth).horizontal_norm();
    r.t.push_back(trace[i].t);
    r.before_errors.push_back(e_before);
    r.after_errors.push_back(e_after);
    sum_before += e_before * e_before;
    sum_after += e_after * e_after;
  }
  if (!r.t.empty()) {
    r.rmse_before = std::sqrt(sum_before / static_cast<double>(r.t.size()));
    r.rmse_after = std::sqrt(sum_after / static_cast<double>(r.t.size()));
  }
  return r;
}

std::vector<std::optional<TimestepVerdict>> recover_trace(const RaimAnalysis& analysis, const Trace& trace,
                                                          const PositioningBackend& backend,
                                                          const SubsetPlan& plan, double n_lambda) {
  std::vector<std::optional<TimestepVerdict>> out(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out[i] = analysis.verdict(i, n_lambda);
    if (!out[i]) continue;
    if (out[i]->rogue.empty()) {
      out[i]->recovered = analysis.unfiltered(i);
    } else {
      out[i]->recovered = recover_position(trace[i], *backend.bind(trace[i]), out[i]->rogue, plan);
    }
  }
  return out;
}

std::vector<SamplingRow> sampling_sweep(std::span<const SweepReplicate> replicates, const SubsetPlan& plan,
                                        const RaimParams& params, std::span<const double> ratios,
                                        double target_fpr, int workers) {
  std::vector<SamplingRow> rows;
  for (std::size_t r = 0; r < replicates.size(); ++r) {
    const auto& rep = replicates[r];
    std::vector<const Trace*> traces = rep.attacked;
    traces.insert(traces.end(), rep.benign.begin(), rep.benign.end());
    std::vector<std::vector<std::optional<ScanEstimates>>> cache(traces.size());
    parallel_for(traces.size(), workers, [&](std::size_t k) {
      for (const auto& scan : *traces[k]) cache[k].push_back(estimate_scan(scan, *rep.backend, plan, true));
    });
    std::vector<std::vector<AttackLabel>> benign_labels_store;
    for (const auto* b : rep.benign) benign_labels_store.push_back(benign_labels(*b));

    for (double ratio : ratios) {
      SubsetPlan p = plan;
      p.sampling_ratio = ratio;
      p.rng_seed = mix_seed(rep.seed, "sampling");
      std::vector<std::unique_ptr<RaimAnalysis>> analyses(traces.size());
      parallel_for(traces.size(), workers, [&](std::size_t k) {
        std::vector<std::optional<TimestepMixture>> mixtures;
        for (const auto& c : cache[k]) mixtures.push_back(c ? mixture_from(*c, p) : std::nullopt);
        analyses[k] = std::make_unique<RaimAnalysis>(std::move(mixtures), params,
                                                     std::vector<std::optional<PositionEstimate>>{});
      });
      std::vector<LabeledRun> attack_runs, benign_pool;
      for (std::size_t k = 0; k < rep.attacked.size(); ++k) {
        attack_runs.push_back({analyses[k].get(), rep.labels[k]});
        benign_pool.push_back({analyses[k].get(), rep.labels[k]});
      }
      for (std::size_t k = 0; k < rep.benign.size(); ++k) {
        benign_pool.push_back({analyses[rep.attacked.size() + k].get(), &benign_labels_store[k]});
      }
      const double targets[] = {target_fpr};
      const auto points = evaluate_detection(attack_runs, benign_pool, KnobRange{0.0, 10.0}, targets);
      rows.push_back({ratio, r, rep.seed, points.front()});
    }
  }
  return rows;
}

}  // namespace gmraim
