#include "gmraim/attack.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "gmraim/error.hpp"
#include "gmraim/rng.hpp"

namespace gmraim {

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kAdditiveGain: return "additive";
    case AttackKind::kReplacement: return "replacement";
    case AttackKind::kPhantomAp: return "phantom";
  }
  return "unknown";
}

AttackKind attack_kind_from_string(const std::string& name) {
  if (name == "additive" || name == "i") return AttackKind::kAdditiveGain;
  if (name == "replacement" || name == "ii") return AttackKind::kReplacement;
  if (name == "phantom" || name == "iii") return AttackKind::kPhantomAp;
  throw Error(ErrorCode::kInvalidConfig, "unknown attack kind '" + name + "'");
}

void AttackSpec::validate() const {
  if (!(sigma_adv >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "attack.sigma_adv must be >= 0");
  if (!(replacement_low < replacement_high)) {
    throw Error(ErrorCode::kInvalidConfig, "attack.replacement_range requires low < high");
  }
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "attack.window_fraction must lie in (0, 1]");
  }
  if (!std::isfinite(mu_adv)) throw Error(ErrorCode::kInvalidConfig, "attack.mu_adv must be finite");
  if (kind == AttackKind::kPhantomAp && !rogue_position.valid()) {
    throw Error(ErrorCode::kInvalidConfig, "attack.rogue_position invalid");
  }
}

std::vector<AttackLabel> benign_labels(const Trace& trace) {
  std::vector<AttackLabel> labels;
  labels.reserve(trace.size());
  for (const auto& scan : trace) labels.push_back({scan.t, false, {}});
  return labels;
}

AttackedTrace inject(const Trace& trace, const AttackSpec& spec, const ApRegistry& registry,
                     const PathLossModel& model) {
  spec.validate();
  AttackedTrace out;
  out.trace = trace;
  out.labels = benign_labels(trace);
  if (trace.empty()) return out;

  Rng rng(mix_seed(spec.rng_seed, "attack"));

  std::set<ApId> heard;
  for (const auto& scan : trace) {
    for (const auto& [id, v] : scan.rssi) heard.insert(id);
  }
  ApId target = spec.target_ap;
  if (target.empty()) {
    std::vector<ApId> candidates(heard.begin(), heard.end());
    target = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  } else if (!heard.count(target)) {
    throw Error(ErrorCode::kUnknownTarget, "attack target '" + target + "' never appears in the trace");
  }
  out.target = target;

  const std::size_t n = trace.size();
  std::size_t length = static_cast<std::size_t>(std::floor(spec.window_fraction * static_cast<double>(n)));
  length = std::clamp<std::size_t>(length, 1, n);
  const std::size_t begin = std::uniform_int_distribution<std::size_t>(0, n - length)(rng);
  out.window_begin = begin;
  out.window_length = length;

  if (spec.kind == AttackKind::kPhantomAp) {
    if (registry.size() > 0 && !registry.contains(target)) {
      throw Error(ErrorCode::kUnknownTarget, "impersonated AP '" + target + "' is not in the registry");
    }
    for (std::size_t i = begin; i < begin + length; ++i) {
      if (!trace[i].truth) {
        throw Error(ErrorCode::kMissingTruth,
                    "phantom attack needs ground-truth positions (t=" + std::to_string(trace[i].t) + ")");
      }
    }
  }

  std::normal_distribution<double> gain(spec.mu_adv, spec.sigma_adv);
  std::uniform_real_distribution<double> replacement(spec.replacement_low, spec.replacement_high);
  std::normal_distribution<double> shadow(0.0, 1.0);

  for (std::size_t i = begin; i < begin + length; ++i) {
    Scan& scan = out.trace[i];
    auto it = scan.rssi.find(target);
    switch (spec.kind) {
      case AttackKind::kAdditiveGain: {
        const double g = spec.sigma_adv > 0.0 ? gain(rng) : spec.mu_adv;
        if (it != scan.rssi.end()) it->second += g;
        break;
      }
      case AttackKind::kReplacement: {
        // The rogue transmits whether or not the legitimate AP is heard here.
        scan.rssi[target] = replacement(rng);
        break;
      }
      case AttackKind::kPhantomAp: {
        const double draw = shadow(rng);
        const double distance = to_local(spec.rogue_position, *scan.truth).norm();
        const double twin = rss_from_distance(model, distance, draw);
        if (spec.phantom_mode == PhantomMode::kMaxCombine && it != scan.rssi.end()) {
          it->second = std::max(it->second, twin);
        } else {
          scan.rssi[target] = twin;
        }
        break;
      }
    }
    out.labels[i].active = true;
    out.labels[i].rogue_aps = {target};
  }
  return out;
}

std::vector<SuiteTrace> make_attack_traces(const Scene& scene, AttackKind kind,
                                           const std::vector<std::uint64_t>& seeds,
                                           const AttackSpec& templ) {
  std::vector<SuiteTrace> out;
  out.reserve(seeds.size());
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const std::uint64_t seed = mix_seed(seeds[k], static_cast<std::uint64_t>(kind));
    SuiteTrace st;
    st.spec = templ;
    st.spec.kind = kind;
    st.spec.rng_seed = mix_seed(seed, "inject");
    st.benign = simulate_trace(scene, mix_seed(seed, "walk"));
    st.attacked = inject(st.benign, st.spec, scene.registry, scene.config.path_loss);
    st.spec.target_ap = st.attacked.target;
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<SuiteTrace> make_attack_suite(const Scene& scene, const std::vector<std::uint64_t>& seeds,
                                          const AttackSpec& templ) {
  if (seeds.size() != static_cast<std::size_t>(kTracesPerKind)) {
    throw Error(ErrorCode::kInvalidConfig,
                "attack suite needs " + std::to_string(kTracesPerKind) + " seeds, got " +
                    std::to_string(seeds.size()));
  }
  std::vector<SuiteTrace> out;
  for (AttackKind kind : {AttackKind::kAdditiveGain, AttackKind::kReplacement, AttackKind::kPhantomAp}) {
    auto part = make_attack_traces(scene, kind, seeds, templ);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace gmraim
