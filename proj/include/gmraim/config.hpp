#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmraim/attack.hpp"
#include "gmraim/baselines.hpp"
#include "gmraim/eval.hpp"
#include "gmraim/positioning.hpp"
#include "gmraim/raim.hpp"
#include "gmraim/scene.hpp"
#include "gmraim/subsets.hpp"

namespace gmraim {

// JSON forms of the parameter structs. Readers reject unknown keys and
// wrongly typed values with ErrorCode::kInvalidConfig.
void to_json(nlohmann::json& j, const GeoPoint& p);
void from_json(const nlohmann::json& j, GeoPoint& p);
void to_json(nlohmann::json& j, const PathLossModel& m);
void from_json(const nlohmann::json& j, PathLossModel& m);
void to_json(nlohmann::json& j, const SceneConfig& c);
void from_json(const nlohmann::json& j, SceneConfig& c);
void to_json(nlohmann::json& j, const AttackSpec& s);
void from_json(const nlohmann::json& j, AttackSpec& s);
void to_json(nlohmann::json& j, const SubsetPlan& p);
void from_json(const nlohmann::json& j, SubsetPlan& p);
void to_json(nlohmann::json& j, const FingerprintParams& p);
void from_json(const nlohmann::json& j, FingerprintParams& p);
void to_json(nlohmann::json& j, const NlsParams& p);
void from_json(const nlohmann::json& j, NlsParams& p);
void to_json(nlohmann::json& j, const RaimParams& p);
void from_json(const nlohmann::json& j, RaimParams& p);
void to_json(nlohmann::json& j, const ClusteringParams& p);
void from_json(const nlohmann::json& j, ClusteringParams& p);
void to_json(nlohmann::json& j, const EcodParams& p);
void from_json(const nlohmann::json& j, EcodParams& p);

enum class BackendKind { kFingerprint, kDistance };
const char* to_string(BackendKind kind);
BackendKind backend_from_string(const std::string& name);

struct SamplingConfig {
  bool enabled = true;
  std::vector<double> ratios{0.25, 0.4, 0.7, 1.0};
  int seeds = 10;
  double fpr = 0.05;
  /// Attack used for the sweep.
  AttackSpec attack;
};

struct EvaluationConfig {
  std::vector<double> targets = default_fpr_targets();
  /// Fully benign traces added to every calibration pool.
  int benign_traces = 4;
  /// Independent scene + suite replicates; replicate 0 is the one written by inject.
  int replicates = 1;
  double recovery_fpr = 0.05;
  SamplingConfig sampling;
};

struct DetectConfig {
  double calibration_fpr = 0.05;
};

struct ScenarioConfig {
  SceneConfig scene;
  /// One set of kTracesPerKind traces per entry.
  std::vector<AttackSpec> attacks;
  SubsetPlan plan;
  BackendKind backend = BackendKind::kFingerprint;
  FingerprintParams fingerprint;
  NlsParams nls;
  RaimParams raim;
  ClusteringParams clustering;
  EcodParams ecod;
  std::vector<Method> detectors{Method::kGmRaim, Method::kClustering, Method::kEcod};
  EvaluationConfig evaluation;
  DetectConfig detect;
  /// Inputs of later stages; empty means the stage's directory under output_dir.
  std::string scene_dir;
  std::string attacks_dir;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

/// Attack i at sigma 2 and 4, attack ii, attack iii.
std::vector<AttackSpec> default_attacks();

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Resolved configuration; output_dir and workers are left out because they
/// do not change any result.
nlohmann::json canonical_json(const ScenarioConfig& config);
std::string config_hash(const ScenarioConfig& config);

std::string sha256_hex(const std::string& bytes);

}  // namespace gmraim
