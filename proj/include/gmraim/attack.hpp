#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gmraim/geo.hpp"
#include "gmraim/scene.hpp"

namespace gmraim {

enum class AttackKind {
  kAdditiveGain,  // (i) target RSSI += Normal(mu_adv, sigma_adv^2)
  kReplacement,   // (ii) target RSSI replaced by Uniform(replacement range)
  kPhantomAp,     // (iii) evil twin at rogue_position impersonating target
};

/// How the evil twin's signal combines with the impersonated AP's own reading.
enum class PhantomMode { kReplace, kMaxCombine };

const char* to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& name);

struct AttackSpec {
  AttackKind kind = AttackKind::kAdditiveGain;
  /// Attacked (or impersonated) AP. Empty picks one of the trace's APs from rng_seed.
  ApId target_ap;
  GeoPoint rogue_position{30.52868, 114.35086, 12.0};
  double mu_adv = 10.0;
  double sigma_adv = 2.0;
  double replacement_low = -70.0;
  double replacement_high = -55.0;
  double window_fraction = 1.0 / 3.0;
  PhantomMode phantom_mode = PhantomMode::kReplace;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct AttackLabel {
  std::int64_t t = 0;
  bool active = false;
  std::set<ApId> rogue_aps;

  friend bool operator==(const AttackLabel&, const AttackLabel&) = default;
};

struct AttackedTrace {
  Trace trace;
  std::vector<AttackLabel> labels;
  ApId target;
  std::size_t window_begin = 0;
  std::size_t window_length = 0;
};

AttackedTrace inject(const Trace& trace, const AttackSpec& spec, const ApRegistry& registry,
                     const PathLossModel& model);

/// Labels for a trace with no attack.
std::vector<AttackLabel> benign_labels(const Trace& trace);

struct SuiteTrace {
  AttackSpec spec;
  Trace benign;
  AttackedTrace attacked;
};

constexpr int kTracesPerKind = 16;

/// kTracesPerKind attacked traces for each of the three attack kinds, each on
/// its own benign walk through `scene`. `templ` supplies the attack
/// parameters; kind, target and seeds are filled per trace. `seeds` must hold
/// kTracesPerKind values.
std::vector<SuiteTrace> make_attack_suite(const Scene& scene, const std::vector<std::uint64_t>& seeds,
                                          const AttackSpec& templ = {});

/// kTracesPerKind traces of a single attack kind.
std::vector<SuiteTrace> make_attack_traces(const Scene& scene, AttackKind kind,
                                           const std::vector<std::uint64_t>& seeds,
                                           const AttackSpec& templ = {});

}  // namespace gmraim
