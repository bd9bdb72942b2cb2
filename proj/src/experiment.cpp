#include "gmraim/experiment.hpp"

#include <sstream>

#include "gmraim/error.hpp"
#include "gmraim/io.hpp"
#include "gmraim/parallel.hpp"
#include "gmraim/rng.hpp"

namespace gmraim {

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  return replicate == 0 ? seed : mix_seed(seed, static_cast<std::uint64_t>(replicate));
}

SceneConfig scene_config_for(const ScenarioConfig& config, std::uint64_t seed) {
  SceneConfig scene = config.scene;
  scene.rng_seed = seed;
  return scene;
}

std::string group_name(std::size_t index, const AttackSpec& spec) {
  return "attack" + std::to_string(index) + "_" + to_string(spec.kind);
}

AttackGroup make_group(const Scene& scene, const AttackSpec& spec, std::size_t index, std::uint64_t seed) {
  const std::uint64_t base = mix_seed(mix_seed(seed, "attacks"), static_cast<std::uint64_t>(index));
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < kTracesPerKind; ++k) seeds.push_back(mix_seed(base, static_cast<std::uint64_t>(k)));
  return {spec, group_name(index, spec), make_attack_traces(scene, spec.kind, seeds, spec)};
}

std::vector<Trace> make_benign_traces(const Scene& scene, int count, std::uint64_t seed) {
  const std::uint64_t base = mix_seed(seed, "benign");
  std::vector<Trace> out;
  for (int b = 0; b < count; ++b) out.push_back(simulate_trace(scene, mix_seed(base, static_cast<std::uint64_t>(b))));
  return out;
}

Replicate make_replicate(const ScenarioConfig& config, std::uint64_t seed) {
  Replicate r;
  r.seed = seed;
  r.scene = generate_scene(scene_config_for(config, seed));
  for (std::size_t i = 0; i < config.attacks.size(); ++i) r.groups.push_back(make_group(r.scene, config.attacks[i], i, seed));
  r.benign = make_benign_traces(r.scene, config.evaluation.benign_traces, seed);
  return r;
}

std::unique_ptr<PositioningBackend> make_backend(const ScenarioConfig& config, const Scene& scene) {
  if (config.backend == BackendKind::kFingerprint) {
    return std::make_unique<FingerprintBackend>(scene.fingerprints, scene.config.origin, config.fingerprint);
  }
  return std::make_unique<DistanceBackend>(scene.registry, scene.config.origin, config.nls);
}

DetectorSetup detector_setup(const ScenarioConfig& config, const PositioningBackend* backend) {
  DetectorSetup setup;
  setup.backend = backend;
  setup.plan = config.plan;
  setup.raim = config.raim;
  setup.clustering = config.clustering;
  setup.ecod = config.ecod;
  return setup;
}

std::vector<LabeledRun> GroupAnalyses::attack_runs(const AttackGroup& group) const {
  std::vector<LabeledRun> runs;
  for (std::size_t k = 0; k < attacked.size(); ++k) runs.push_back({attacked[k].get(), &group.traces[k].attacked.labels});
  return runs;
}

std::vector<LabeledRun> GroupAnalyses::calibration_pool(const AttackGroup& group) const {
  auto runs = attack_runs(group);
  for (std::size_t k = 0; k < benign.size(); ++k) runs.push_back({benign[k].get(), &benign_labels[k]});
  return runs;
}

KnobRange GroupAnalyses::range(Method method) const {
  std::vector<const TraceAnalysis*> all;
  for (const auto& a : attacked) all.push_back(a.get());
  for (const auto& a : benign) all.push_back(a.get());
  return knob_range(method, all);
}

GroupAnalyses analyze_group(Method method, const AttackGroup& group, const std::vector<Trace>& benign,
                            const DetectorSetup& setup, int workers) {
  GroupAnalyses g;
  const std::size_t n_attacked = group.traces.size();
  std::vector<std::unique_ptr<TraceAnalysis>> all(n_attacked + benign.size());
  parallel_for(all.size(), workers, [&](std::size_t k) {
    const Trace& trace = k < n_attacked ? group.traces[k].attacked.trace : benign[k - n_attacked];
    all[k] = analyze(method, trace, setup);
  });
  for (std::size_t k = 0; k < all.size(); ++k) (k < n_attacked ? g.attacked : g.benign).push_back(std::move(all[k]));
  for (const auto& b : benign) g.benign_labels.push_back(benign_labels(b));
  return g;
}

void evaluate_replicate(const ScenarioConfig& config, const Replicate& replicate, int index, int workers,
                        EvaluationTables& out) {
  const auto backend = make_backend(config, replicate.scene);
  const DetectorSetup setup = detector_setup(config, backend.get());
  for (const auto& group : replicate.groups) {
    for (Method method : config.detectors) {
      const GroupAnalyses g = analyze_group(method, group, replicate.benign, setup, workers);
      const auto attack_runs = g.attack_runs(group);
      const auto pool = g.calibration_pool(group);
      const KnobRange range = g.range(method);
      for (const auto& p : evaluate_detection(attack_runs, pool, range, config.evaluation.targets)) {
        out.roc.push_back({index, method, group.spec, p});
      }
      if (method != Method::kGmRaim) continue;

      const double knob = calibrate_runs(pool, range, config.evaluation.recovery_fpr);
      std::vector<RecoveryRow> rows(group.traces.size());
      parallel_for(group.traces.size(), workers, [&](std::size_t k) {
        const auto& raim = dynamic_cast<const RaimAnalysis&>(*g.attacked[k]);
        const auto& attacked = group.traces[k].attacked;
        const auto verdicts = recover_trace(raim, attacked.trace, *backend, config.plan, knob);
        std::vector<std::optional<PositionEstimate>> before(attacked.trace.size());
        for (std::size_t i = 0; i < before.size(); ++i) before[i] = raim.unfiltered(i);
        const auto report = evaluate_recovery(verdicts, before, attacked.trace, attacked.labels,
                                              replicate.scene.config.origin);
        rows[k] = {index, group.spec, k, knob, report.t.size(), report.rmse_before, report.rmse_after};
      });
      out.recovery.insert(out.recovery.end(), rows.begin(), rows.end());
    }
  }
}

void run_sampling(const ScenarioConfig& config, int workers, EvaluationTables& out) {
  const auto& sampling = config.evaluation.sampling;
  if (!sampling.enabled) return;
  const std::uint64_t base = mix_seed(config.seed, "sampling");
  for (int s = 0; s < sampling.seeds; ++s) {
    const std::uint64_t seed = mix_seed(base, static_cast<std::uint64_t>(s));
    const Scene scene = generate_scene(scene_config_for(config, seed));
    const AttackGroup group = make_group(scene, sampling.attack, 0, seed);
    const std::vector<Trace> benign = make_benign_traces(scene, config.evaluation.benign_traces, seed);
    const auto backend = make_backend(config, scene);
    SweepReplicate rep;
    rep.backend = backend.get();
    rep.seed = seed;
    for (const auto& t : group.traces) {
      rep.attacked.push_back(&t.attacked.trace);
      rep.labels.push_back(&t.attacked.labels);
    }
    for (const auto& b : benign) rep.benign.push_back(&b);
    const std::vector<SweepReplicate> reps{rep};
    for (const auto& row : sampling_sweep(reps, config.plan, config.raim, sampling.ratios, sampling.fpr, workers)) {
      out.sampling.push_back({s, seed, row.ratio, row.point});
    }
  }
}

namespace {

std::string num(double v) { return format_double(v); }
std::string num(const std::optional<double>& v) { return v ? format_double(*v) : ""; }
std::string sigma_of(const AttackSpec& spec) {
  return spec.kind == AttackKind::kAdditiveGain ? format_double(spec.sigma_adv) : "";
}

}  // namespace

std::string roc_csv(const std::vector<RocRow>& rows) {
  std::ostringstream out;
  out << "replicate,method,attack,sigma_adv,target_fpr,achieved_fpr,tpr_detect,tpr_exclude,knob\n";
  for (const auto& r : rows) {
    out << r.replicate << ',' << to_string(r.method) << ',' << to_string(r.spec.kind) << ',' << sigma_of(r.spec) << ','
        << num(r.point.target_fpr) << ',' << num(r.point.achieved_fpr) << ',' << num(r.point.tpr_detect) << ','
        << num(r.point.tpr_exclude) << ',' << num(r.point.knob) << '\n';
  }
  return out.str();
}

std::string exclusion_csv(const std::vector<RocRow>& rows) {
  std::ostringstream out;
  out << "replicate,attack,sigma_adv,target_fpr,tpr_detect,tpr_exclude,over_exclusion\n";
  for (const auto& r : rows) {
    if (!r.point.tpr_exclude) continue;
    out << r.replicate << ',' << to_string(r.spec.kind) << ',' << sigma_of(r.spec) << ',' << num(r.point.target_fpr)
        << ',' << num(r.point.tpr_detect) << ',' << num(r.point.tpr_exclude) << ',' << num(r.point.over_exclusion)
        << '\n';
  }
  return out.str();
}

std::string recovery_csv(const std::vector<RecoveryRow>& rows) {
  std::ostringstream out;
  out << "replicate,attack,sigma_adv,trace,knob,active,rmse_before,rmse_after\n";
  for (const auto& r : rows) {
    out << r.replicate << ',' << to_string(r.spec.kind) << ',' << sigma_of(r.spec) << ',' << r.trace << ','
        << num(r.knob) << ',' << r.active << ',' << num(r.rmse_before) << ',' << num(r.rmse_after) << '\n';
  }
  return out.str();
}

std::string sampling_csv(const std::vector<SamplingCsvRow>& rows) {
  std::ostringstream out;
  out << "replicate,seed,ratio,target_fpr,achieved_fpr,tpr_detect,knob\n";
  for (const auto& r : rows) {
    out << r.replicate << ',' << r.seed << ',' << num(r.ratio) << ',' << num(r.point.target_fpr) << ','
        << num(r.point.achieved_fpr) << ',' << num(r.point.tpr_detect) << ',' << num(r.point.knob) << '\n';
  }
  return out.str();
}

}  // namespace gmraim
