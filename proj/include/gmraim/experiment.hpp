#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gmraim/attack.hpp"
#include "gmraim/config.hpp"
#include "gmraim/eval.hpp"
#include "gmraim/scene.hpp"

namespace gmraim {

/// kTracesPerKind attacked traces generated from one AttackSpec.
struct AttackGroup {
  AttackSpec spec;
  std::string name;  // e.g. "attack0_additive"
  std::vector<SuiteTrace> traces;
};

/// One scene with its attack groups and fully benign traces.
struct Replicate {
  std::uint64_t seed = 0;
  Scene scene;
  std::vector<AttackGroup> groups;
  std::vector<Trace> benign;
};

/// Replicate 0 uses the scenario seed itself.
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

SceneConfig scene_config_for(const ScenarioConfig& config, std::uint64_t seed);
std::string group_name(std::size_t index, const AttackSpec& spec);
AttackGroup make_group(const Scene& scene, const AttackSpec& spec, std::size_t index, std::uint64_t seed);
std::vector<Trace> make_benign_traces(const Scene& scene, int count, std::uint64_t seed);
Replicate make_replicate(const ScenarioConfig& config, std::uint64_t seed);

std::unique_ptr<PositioningBackend> make_backend(const ScenarioConfig& config, const Scene& scene);
DetectorSetup detector_setup(const ScenarioConfig& config, const PositioningBackend* backend);

/// Analyses of every attacked and benign trace of a group for one method.
struct GroupAnalyses {
  std::vector<std::unique_ptr<TraceAnalysis>> attacked;
  std::vector<std::unique_ptr<TraceAnalysis>> benign;
  std::vector<std::vector<AttackLabel>> benign_labels;

  std::vector<LabeledRun> attack_runs(const AttackGroup& group) const;
  /// Attacked traces plus the fully benign ones.
  std::vector<LabeledRun> calibration_pool(const AttackGroup& group) const;
  KnobRange range(Method method) const;
};

GroupAnalyses analyze_group(Method method, const AttackGroup& group, const std::vector<Trace>& benign,
                            const DetectorSetup& setup, int workers);

struct RocRow {
  int replicate = 0;
  Method method = Method::kGmRaim;
  AttackSpec spec;
  RocPoint point;
};

struct RecoveryRow {
  int replicate = 0;
  AttackSpec spec;
  std::size_t trace = 0;
  double knob = 0.0;
  std::size_t active = 0;
  double rmse_before = 0.0;
  double rmse_after = 0.0;
};

struct SamplingCsvRow {
  int replicate = 0;
  std::uint64_t seed = 0;
  double ratio = 1.0;
  RocPoint point;
};

struct EvaluationTables {
  std::vector<RocRow> roc;
  std::vector<RecoveryRow> recovery;
  std::vector<SamplingCsvRow> sampling;
};

/// ROC points for every configured detector and attack group, plus gm_raim
/// recovery per trace at the recovery operating point.
void evaluate_replicate(const ScenarioConfig& config, const Replicate& replicate, int index, int workers,
                        EvaluationTables& out);

void run_sampling(const ScenarioConfig& config, int workers, EvaluationTables& out);

std::string roc_csv(const std::vector<RocRow>& rows);
std::string exclusion_csv(const std::vector<RocRow>& rows);
std::string recovery_csv(const std::vector<RecoveryRow>& rows);
std::string sampling_csv(const std::vector<SamplingCsvRow>& rows);

}  // namespace gmraim
