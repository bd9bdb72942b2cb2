#include "gmraim/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <set>

#include "gmraim/error.hpp"
#include "gmraim/io.hpp"

namespace gmraim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, path + ": " + what);
}

const char* type_name(const json& j) { return j.type_name(); }

void read_value(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) bad(path, std::string("expected a number, got ") + type_name(j));
  out = j.get<double>();
  if (!std::isfinite(out)) bad(path, "must be finite");
}

void read_value(const json& j, const std::string& path, int& out) {
  if (!j.is_number_integer()) bad(path, std::string("expected an integer, got ") + type_name(j));
  const auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) bad(path, "integer out of range");
  out = static_cast<int>(v);
}

void read_value(const json& j, const std::string& path, std::uint64_t& out) {
  if (!j.is_number_unsigned()) bad(path, std::string("expected a non-negative integer, got ") + type_name(j));
  out = j.get<std::uint64_t>();
}

void read_value(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) bad(path, std::string("expected a boolean, got ") + type_name(j));
  out = j.get<bool>();
}

void read_value(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) bad(path, std::string("expected a string, got ") + type_name(j));
  out = j.get<std::string>();
}

void read_value(const json& j, const std::string& path, GeoPoint& out) {
  if (!j.is_array() || j.size() != 3) bad(path, "expected [lat, lon, height]");
  read_value(j[0], path + "[0]", out.latitude);
  read_value(j[1], path + "[1]", out.longitude);
  read_value(j[2], path + "[2]", out.height);
  if (!out.valid()) bad(path, "latitude/longitude out of range");
}

void read_value(const json& j, const std::string& path, std::array<double, 2>& out) {
  if (!j.is_array() || j.size() != 2) bad(path, "expected [east, north]");
  read_value(j[0], path + "[0]", out[0]);
  read_value(j[1], path + "[1]", out[1]);
}

template <class T>
void read_value(const json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) bad(path, std::string("expected an array, got ") + type_name(j));
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    read_value(j[i], path + "[" + std::to_string(i) + "]", v);
    out.push_back(std::move(v));
  }
}

/// Reads fields of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) bad(path_.empty() ? "config" : path_, std::string("expected an object, got ") + type_name(j));
  }

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return false;
    read_value(*it, child(key), out);
    return true;
  }

  /// Value of `key` if present; the caller parses it.
  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) bad(child(it.key().c_str()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_value(const json& j, const std::string& path, PathLossModel& m) {
  Fields f(j, path);
  f.get("rss_at_1m", m.rss_at_1m);
  f.get("exponent", m.exponent);
  f.get("shadowing_sigma", m.shadowing_sigma);
  f.get("min_distance", m.min_distance);
  f.finish();
}

void read_value(const json& j, const std::string& path, SceneConfig& c) {
  Fields f(j, path);
  f.get("origin", c.origin);
  f.get("width", c.width);
  f.get("depth", c.depth);
  f.get("ap_count", c.ap_count);
  std::string layout;
  if (f.get("layout", layout)) {
    if (layout == "uniform") {
      c.layout = ApLayout::kUniform;
    } else if (layout == "perimeter") {
      c.layout = ApLayout::kPerimeter;
    } else {
      bad(f.child("layout"), "expected \"uniform\" or \"perimeter\", got \"" + layout + "\"");
    }
  }
  f.get("ap_height_min", c.ap_height_min);
  f.get("ap_height_max", c.ap_height_max);
  if (const auto* pl = f.raw("path_loss")) read_value(*pl, f.child("path_loss"), c.path_loss);
  f.get("fingerprint_grid_step", c.fingerprint_grid_step);
  f.get("fingerprint_samples", c.fingerprint_samples);
  f.get("visibility_floor", c.visibility_floor);
  f.get("client_height", c.client_height);
  f.get("trace_length", c.trace_length);
  f.get("walking_speed", c.walking_speed);
  f.get("waypoints", c.waypoints);
  f.get("random_waypoints", c.random_waypoints);
  f.get("margin", c.margin);
  f.get("rng_seed", c.rng_seed);
  f.finish();
}

void read_value(const json& j, const std::string& path, AttackSpec& s) {
  Fields f(j, path);
  std::string kind;
  if (f.get("kind", kind)) {
    try {
      s.kind = attack_kind_from_string(kind);
    } catch (const Error& e) {
      bad(f.child("kind"), e.what());
    }
  }
  f.get("target_ap", s.target_ap);
  f.get("rogue_position", s.rogue_position);
  f.get("mu_adv", s.mu_adv);
  f.get("sigma_adv", s.sigma_adv);
  std::vector<double> range;
  if (f.get("replacement_range", range)) {
    if (range.size() != 2) bad(f.child("replacement_range"), "expected [low, high]");
    s.replacement_low = range[0];
    s.replacement_high = range[1];
  }
  f.get("window_fraction", s.window_fraction);
  std::string mode;
  if (f.get("phantom_mode", mode)) {
    if (mode == "replace") {
      s.phantom_mode = PhantomMode::kReplace;
    } else if (mode == "max") {
      s.phantom_mode = PhantomMode::kMaxCombine;
    } else {
      bad(f.child("phantom_mode"), "expected \"replace\" or \"max\", got \"" + mode + "\"");
    }
  }
  f.get("rng_seed", s.rng_seed);
  f.finish();
}

void read_value(const json& j, const std::string& path, SubsetPlan& p) {
  Fields f(j, path);
  f.get("min_size", p.min_size);
  f.get("max_size", p.max_size);
  f.get("sampling_ratio", p.sampling_ratio);
  f.get("rng_seed", p.rng_seed);
  f.finish();
}

void read_value(const json& j, const std::string& path, FingerprintParams& p) {
  Fields f(j, path);
  f.get("k", p.k);
  f.get("d_min", p.d_min);
  f.finish();
}

void read_value(const json& j, const std::string& path, NlsParams& p) {
  Fields f(j, path);
  f.get("rss_floor", p.rss_floor);
  f.get("max_iterations", p.max_iterations);
  f.get("step_tolerance", p.step_tolerance);
  f.get("damping", p.damping);
  f.finish();
}

void read_value(const json& j, const std::string& path, RaimParams& p) {
  Fields f(j, path);
  f.get("n_lambda", p.n_lambda);
  f.get("strict", p.strict);
  std::string rule;
  if (f.get("exclusion", rule)) {
    if (rule == "vote") {
      p.exclusion = ExclusionRule::kVote;
    } else if (rule == "intersection") {
      p.exclusion = ExclusionRule::kIntersection;
    } else {
      bad(f.child("exclusion"), "expected \"vote\" or \"intersection\", got \"" + rule + "\"");
    }
  }
  f.finish();
}

void read_value(const json& j, const std::string& path, ClusteringParams& p) {
  Fields f(j, path);
  f.get("window", p.window);
  f.get("theta", p.theta);
  f.get("max_iterations", p.max_iterations);
  f.finish();
}

void read_value(const json& j, const std::string& path, EcodParams& p) {
  Fields f(j, path);
  f.get("threshold", p.threshold);
  f.get("lag", p.lag);
  f.finish();
}

json geo_json(const GeoPoint& p) { return json::array({p.latitude, p.longitude, p.height}); }

const char* layout_name(ApLayout layout) { return layout == ApLayout::kUniform ? "uniform" : "perimeter"; }

}  // namespace

void to_json(json& j, const GeoPoint& p) { j = geo_json(p); }
void from_json(const json& j, GeoPoint& p) { read_value(j, "point", p); }

void to_json(json& j, const PathLossModel& m) {
  j = json{{"rss_at_1m", m.rss_at_1m},
           {"exponent", m.exponent},
           {"shadowing_sigma", m.shadowing_sigma},
           {"min_distance", m.min_distance}};
}
void from_json(const json& j, PathLossModel& m) { read_value(j, "path_loss", m); }

void to_json(json& j, const SceneConfig& c) {
  json waypoints = json::array();
  for (const auto& w : c.waypoints) waypoints.push_back({w[0], w[1]});
  j = json{{"origin", geo_json(c.origin)},
           {"width", c.width},
           {"depth", c.depth},
           {"ap_count", c.ap_count},
           {"layout", layout_name(c.layout)},
           {"ap_height_min", c.ap_height_min},
           {"ap_height_max", c.ap_height_max},
           {"path_loss", c.path_loss},
           {"fingerprint_grid_step", c.fingerprint_grid_step},
           {"fingerprint_samples", c.fingerprint_samples},
           {"visibility_floor", c.visibility_floor},
           {"client_height", c.client_height},
           {"trace_length", c.trace_length},
           {"walking_speed", c.walking_speed},
           {"waypoints", waypoints},
           {"random_waypoints", c.random_waypoints},
           {"margin", c.margin},
           {"rng_seed", c.rng_seed}};
}
void from_json(const json& j, SceneConfig& c) { read_value(j, "scene", c); }

void to_json(json& j, const AttackSpec& s) {
  j = json{{"kind", to_string(s.kind)},
           {"target_ap", s.target_ap},
           {"rogue_position", geo_json(s.rogue_position)},
           {"mu_adv", s.mu_adv},
           {"sigma_adv", s.sigma_adv},
           {"replacement_range", {s.replacement_low, s.replacement_high}},
           {"window_fraction", s.window_fraction},
           {"phantom_mode", s.phantom_mode == PhantomMode::kReplace ? "replace" : "max"},
           {"rng_seed", s.rng_seed}};
}
void from_json(const json& j, AttackSpec& s) { read_value(j, "attack", s); }

void to_json(json& j, const SubsetPlan& p) {
  j = json{{"min_size", p.min_size},
           {"max_size", p.max_size},
           {"sampling_ratio", p.sampling_ratio},
           {"rng_seed", p.rng_seed}};
}
void from_json(const json& j, SubsetPlan& p) { read_value(j, "plan", p); }

void to_json(json& j, const FingerprintParams& p) { j = json{{"k", p.k}, {"d_min", p.d_min}}; }
void from_json(const json& j, FingerprintParams& p) { read_value(j, "fingerprint", p); }

void to_json(json& j, const NlsParams& p) {
  j = json{{"rss_floor", p.rss_floor},
           {"max_iterations", p.max_iterations},
           {"step_tolerance", p.step_tolerance},
           {"damping", p.damping}};
}
void from_json(const json& j, NlsParams& p) { read_value(j, "nls", p); }

void to_json(json& j, const RaimParams& p) {
  j = json{{"n_lambda", p.n_lambda},
           {"strict", p.strict},
           {"exclusion", p.exclusion == ExclusionRule::kVote ? "vote" : "intersection"}};
}
void from_json(const json& j, RaimParams& p) { read_value(j, "raim", p); }

void to_json(json& j, const ClusteringParams& p) {
  j = json{{"window", p.window}, {"theta", p.theta}, {"max_iterations", p.max_iterations}};
}
void from_json(const json& j, ClusteringParams& p) { read_value(j, "clustering", p); }

void to_json(json& j, const EcodParams& p) { j = json{{"threshold", p.threshold}, {"lag", p.lag}}; }
void from_json(const json& j, EcodParams& p) { read_value(j, "ecod", p); }

const char* to_string(BackendKind kind) { return kind == BackendKind::kFingerprint ? "fingerprint" : "distance"; }

BackendKind backend_from_string(const std::string& name) {
  if (name == "fingerprint") return BackendKind::kFingerprint;
  if (name == "distance") return BackendKind::kDistance;
  throw Error(ErrorCode::kInvalidConfig, "backend: expected \"fingerprint\" or \"distance\", got \"" + name + "\"");
}

std::vector<AttackSpec> default_attacks() {
  std::vector<AttackSpec> out(4);
  out[0].kind = AttackKind::kAdditiveGain;
  out[0].sigma_adv = 2.0;
  out[1].kind = AttackKind::kAdditiveGain;
  out[1].sigma_adv = 4.0;
  out[2].kind = AttackKind::kReplacement;
  out[3].kind = AttackKind::kPhantomAp;
  return out;
}

void ScenarioConfig::validate() const {
  scene.validate();
  if (attacks.empty()) throw Error(ErrorCode::kInvalidConfig, "attacks: at least one attack is required");
  for (const auto& a : attacks) a.validate();
  evaluation.sampling.attack.validate();
  plan.validate();
  fingerprint.validate();
  nls.validate();
  raim.validate();
  clustering.validate();
  ecod.validate();
  if (detectors.empty()) throw Error(ErrorCode::kInvalidConfig, "detectors: at least one detector is required");
  std::set<Method> seen;
  for (Method m : detectors) {
    if (!seen.insert(m).second) {
      throw Error(ErrorCode::kInvalidConfig, std::string("detectors: duplicate entry '") + to_string(m) + "'");
    }
  }
  if (evaluation.targets.empty()) throw Error(ErrorCode::kInvalidConfig, "evaluation.targets: empty");
  for (double t : evaluation.targets) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "evaluation.targets: values must lie in (0, 1]");
  }
  auto fraction = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) throw Error(ErrorCode::kInvalidConfig, std::string(name) + " must lie in (0, 1]");
  };
  fraction(evaluation.recovery_fpr, "evaluation.recovery_fpr");
  fraction(evaluation.sampling.fpr, "evaluation.sampling.fpr");
  fraction(detect.calibration_fpr, "detect.calibration_fpr");
  if (evaluation.benign_traces < 0) throw Error(ErrorCode::kInvalidConfig, "evaluation.benign_traces must be >= 0");
  if (evaluation.replicates < 1) throw Error(ErrorCode::kInvalidConfig, "evaluation.replicates must be >= 1");
  if (evaluation.sampling.seeds < 1) throw Error(ErrorCode::kInvalidConfig, "evaluation.sampling.seeds must be >= 1");
  for (double r : evaluation.sampling.ratios) fraction(r, "evaluation.sampling.ratios");
  if (workers < 1) throw Error(ErrorCode::kInvalidConfig, "workers must be >= 1");
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
  ScenarioConfig c;
  c.attacks = default_attacks();
  Fields f(j, "");
  if (const auto* v = f.raw("scene")) read_value(*v, "scene", c.scene);
  if (const auto* v = f.raw("attacks")) {
    if (!v->is_array()) bad("attacks", "expected an array");
    c.attacks.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      AttackSpec s;
      read_value((*v)[i], "attacks[" + std::to_string(i) + "]", s);
      c.attacks.push_back(s);
    }
  }
  if (const auto* v = f.raw("plan")) read_value(*v, "plan", c.plan);
  std::string backend;
  if (f.get("backend", backend)) c.backend = backend_from_string(backend);
  if (const auto* v = f.raw("fingerprint")) read_value(*v, "fingerprint", c.fingerprint);
  if (const auto* v = f.raw("nls")) read_value(*v, "nls", c.nls);
  if (const auto* v = f.raw("raim")) read_value(*v, "raim", c.raim);
  if (const auto* v = f.raw("clustering")) read_value(*v, "clustering", c.clustering);
  if (const auto* v = f.raw("ecod")) read_value(*v, "ecod", c.ecod);
  std::vector<std::string> detectors;
  if (f.get("detectors", detectors)) {
    c.detectors.clear();
    for (const auto& d : detectors) {
      try {
        c.detectors.push_back(method_from_string(d));
      } catch (const Error& e) {
        bad("detectors", e.what());
      }
    }
  }
  if (const auto* v = f.raw("evaluation")) {
    Fields e(*v, "evaluation");
    e.get("targets", c.evaluation.targets);
    e.get("benign_traces", c.evaluation.benign_traces);
    e.get("replicates", c.evaluation.replicates);
    e.get("recovery_fpr", c.evaluation.recovery_fpr);
    if (const auto* s = e.raw("sampling")) {
      Fields sf(*s, "evaluation.sampling");
      sf.get("enabled", c.evaluation.sampling.enabled);
      sf.get("ratios", c.evaluation.sampling.ratios);
      sf.get("seeds", c.evaluation.sampling.seeds);
      sf.get("fpr", c.evaluation.sampling.fpr);
      if (const auto* a = sf.raw("attack")) read_value(*a, "evaluation.sampling.attack", c.evaluation.sampling.attack);
      sf.finish();
    }
    e.finish();
  }
  if (const auto* v = f.raw("detect")) {
    Fields d(*v, "detect");
    d.get("calibration_fpr", c.detect.calibration_fpr);
    d.finish();
  }
  f.get("scene_dir", c.scene_dir);
  f.get("attacks_dir", c.attacks_dir);
  f.get("output_dir", c.output_dir);
  f.get("seed", c.seed);
  f.get("workers", c.workers);
  f.finish();
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

json canonical_json(const ScenarioConfig& c) {
  json detectors = json::array();
  for (Method m : c.detectors) detectors.push_back(to_string(m));
  return json{{"scene", c.scene},
              {"attacks", c.attacks},
              {"plan", c.plan},
              {"backend", to_string(c.backend)},
              {"fingerprint", c.fingerprint},
              {"nls", c.nls},
              {"raim", c.raim},
              {"clustering", c.clustering},
              {"ecod", c.ecod},
              {"detectors", detectors},
              {"evaluation",
               {{"targets", c.evaluation.targets},
                {"benign_traces", c.evaluation.benign_traces},
                {"replicates", c.evaluation.replicates},
                {"recovery_fpr", c.evaluation.recovery_fpr},
                {"sampling",
                 {{"enabled", c.evaluation.sampling.enabled},
                  {"ratios", c.evaluation.sampling.ratios},
                  {"seeds", c.evaluation.sampling.seeds},
                  {"fpr", c.evaluation.sampling.fpr},
                  {"attack", c.evaluation.sampling.attack}}}}},
              {"detect", {{"calibration_fpr", c.detect.calibration_fpr}}},
              {"scene_dir", c.scene_dir},
              {"attacks_dir", c.attacks_dir},
              {"seed", c.seed}};
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string config_hash(const ScenarioConfig& config) { return sha256_hex(canonical_json(config).dump()); }

}  // namespace gmraim
