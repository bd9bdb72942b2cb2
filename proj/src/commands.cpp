#include "gmraim/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gmraim/error.hpp"
#include "gmraim/experiment.hpp"
#include "gmraim/io.hpp"

namespace gmraim {

namespace fs = std::filesystem;
using nlohmann::json;

ScenarioConfig resolve_config(const CommandOptions& options) {
  ScenarioConfig config = options.config ? load_config(*options.config) : parse_config("{}");
  if (options.out) config.output_dir = options.out->string();
  if (options.seed) config.seed = *options.seed;
  if (options.workers) config.workers = *options.workers;
  if (options.backend) config.backend = backend_from_string(*options.backend);
  config.validate();
  return config;
}

namespace {

std::string two_digits(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", k);
  return buf;
}

fs::path scene_input(const ScenarioConfig& c) {
  return c.scene_dir.empty() ? fs::path(c.output_dir) / "scene" : fs::path(c.scene_dir);
}

fs::path attacks_input(const ScenarioConfig& c) {
  return c.attacks_dir.empty() ? fs::path(c.output_dir) / "attacks" : fs::path(c.attacks_dir);
}

void require_input(const fs::path& marker, const char* stage) {
  if (!fs::exists(marker)) {
    throw Error(ErrorCode::kIo, "missing input " + marker.string() + " (run " + stage + " first)");
  }
}

/// path relative to `root` -> sha256, sorted.
std::map<std::string, std::string> checksums(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root).generic_string();
    if (rel == "manifest.json") continue;
    out.emplace(rel, sha256_hex(read_file(entry.path())));
  }
  return out;
}

void write_manifest(const fs::path& dir, const std::string& stage, const ScenarioConfig& config) {
  json files = json::object();
  for (const auto& [path, sum] : checksums(dir)) files[path] = sum;
  json manifest{{"stage", stage}, {"config_hash", config_hash(config)}, {"seed", config.seed}, {"files", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// Runs `body` against a scratch directory that replaces `<out>/<stage>` on success.
template <class Body>
void staged(const ScenarioConfig& config, const std::string& stage, Body&& body) {
  const fs::path out(config.output_dir);
  const fs::path final_dir = out / stage;
  const fs::path scratch = out / ("." + stage + ".partial");
  fs::create_directories(out);
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  try {
    body(scratch);
    write_manifest(scratch, stage, config);
    fs::remove_all(final_dir);
    fs::rename(scratch, final_dir);
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(scratch, ignored);
    throw;
  }
}

json point_json(const LocalPoint& p) { return json::array({p.east, p.north, p.up}); }

std::string raim_verdict_line(const TimestepVerdict& v) {
  json j;
  j["t"] = v.t;
  j["alarm"] = v.alarm;
  j["fused"] = point_json(v.fused);
  j["lambda"] = v.lambda;
  j["flagged"] = v.flagged;
  j["rogue"] = std::vector<std::string>(v.rogue.begin(), v.rogue.end());
  if (v.recovered) j["recovered"] = point_json(v.recovered->position);
  return j.dump();
}

std::string baseline_verdict_line(std::int64_t t, bool alarm, double score, const std::set<ApId>& rogue) {
  json j;
  j["t"] = t;
  j["alarm"] = alarm;
  j["score"] = std::isfinite(score) ? json(score) : json(nullptr);
  j["rogue"] = std::vector<std::string>(rogue.begin(), rogue.end());
  return j.dump();
}

std::string verdict_lines(Method method, const TraceAnalysis& analysis, const Trace& trace,
                          const PositioningBackend* backend, const SubsetPlan& plan, double knob) {
  std::ostringstream out;
  if (method == Method::kGmRaim) {
    const auto& raim = dynamic_cast<const RaimAnalysis&>(analysis);
    for (const auto& v : recover_trace(raim, trace, *backend, plan, knob)) {
      if (v) out << raim_verdict_line(*v) << '\n';
    }
  } else if (method == Method::kClustering) {
    const auto& c = dynamic_cast<const ClusteringTraceAnalysis&>(analysis).analysis();
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      out << baseline_verdict_line(c.entries[i].t, c.alarm(i, knob), c.score(i), c.flagged(i, knob)) << '\n';
    }
  } else {
    const auto& scores = dynamic_cast<const EcodTraceAnalysis&>(analysis).scores();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      out << baseline_verdict_line(trace[i].t, scores[i] > knob, scores[i], {}) << '\n';
    }
  }
  return out.str();
}

json window_json(const AttackedTrace& a) {
  return json{{"target", a.target}, {"window_begin", a.window_begin}, {"window_length", a.window_length}};
}

void write_group(const fs::path& dir, const AttackGroup& group) {
  fs::create_directories(dir);
  json traces = json::array();
  for (std::size_t k = 0; k < group.traces.size(); ++k) {
    const auto& a = group.traces[k].attacked;
    save_trace(dir / (two_digits(k) + ".trace.jsonl"), a.trace);
    save_labels(dir / (two_digits(k) + ".labels.jsonl"), a.labels);
    traces.push_back(window_json(a));
  }
  write_file(dir / "group.json", json{{"spec", group.spec}, {"traces", traces}}.dump(2) + "\n");
}

AttackGroup read_group(const fs::path& dir, const std::string& name) {
  const fs::path meta_path = dir / "group.json";
  require_input(meta_path, "inject");
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, meta_path.string() + ": " + e.what());
  }
  AttackGroup group;
  group.name = name;
  group.spec = meta.at("spec").get<AttackSpec>();
  for (std::size_t k = 0; k < meta.at("traces").size(); ++k) {
    const auto& w = meta["traces"][k];
    SuiteTrace st;
    st.spec = group.spec;
    st.attacked.trace = load_trace(dir / (two_digits(k) + ".trace.jsonl"));
    st.attacked.labels = load_labels(dir / (two_digits(k) + ".labels.jsonl"));
    if (st.attacked.labels.size() != st.attacked.trace.size()) {
      throw Error(ErrorCode::kInvalidField, (dir / (two_digits(k) + ".labels.jsonl")).string() +
                                                ": label count does not match the trace");
    }
    st.attacked.target = w.at("target").get<std::string>();
    st.attacked.window_begin = w.at("window_begin").get<std::size_t>();
    st.attacked.window_length = w.at("window_length").get<std::size_t>();
    group.traces.push_back(std::move(st));
  }
  return group;
}

/// Replicate 0 as written by gen-scene and inject.
Replicate load_replicate(const ScenarioConfig& config) {
  require_input(scene_input(config) / "scene.json", "gen-scene");
  require_input(attacks_input(config) / "manifest.json", "inject");
  Replicate r;
  r.seed = config.seed;
  r.scene = load_scene(scene_input(config));
  for (std::size_t i = 0; i < config.attacks.size(); ++i) {
    const std::string name = group_name(i, config.attacks[i]);
    r.groups.push_back(read_group(attacks_input(config) / name, name));
  }
  for (int b = 0; b < config.evaluation.benign_traces; ++b) {
    const fs::path path = attacks_input(config) / "benign" / (two_digits(b) + ".trace.jsonl");
    require_input(path, "inject");
    r.benign.push_back(load_trace(path));
  }
  return r;
}

}  // namespace

void cmd_gen_scene(const ScenarioConfig& config) {
  staged(config, "scene", [&](const fs::path& dir) {
    write_scene(dir, generate_scene(scene_config_for(config, config.seed)));
  });
}

void cmd_inject(const ScenarioConfig& config) {
  require_input(scene_input(config) / "scene.json", "gen-scene");
  const Scene scene = load_scene(scene_input(config));
  staged(config, "attacks", [&](const fs::path& dir) {
    for (std::size_t i = 0; i < config.attacks.size(); ++i) {
      const AttackGroup group = make_group(scene, config.attacks[i], i, config.seed);
      write_group(dir / group.name, group);
    }
    fs::create_directories(dir / "benign");
    const auto benign = make_benign_traces(scene, config.evaluation.benign_traces, config.seed);
    for (std::size_t b = 0; b < benign.size(); ++b) save_trace(dir / "benign" / (two_digits(b) + ".trace.jsonl"), benign[b]);
  });
}

void cmd_detect(const ScenarioConfig& config) {
  const Replicate r = load_replicate(config);
  const auto backend = make_backend(config, r.scene);
  const DetectorSetup setup = detector_setup(config, backend.get());
  const double target = config.detect.calibration_fpr;
  staged(config, "detect", [&](const fs::path& dir) {
    json calibration = json::object();
    for (Method method : config.detectors) {
      const std::string mname = to_string(method);
      for (const auto& group : r.groups) {
        const GroupAnalyses g = analyze_group(method, group, r.benign, setup, config.workers);
        const auto pool = g.calibration_pool(group);
        const KnobRange range = g.range(method);
        const double knob = calibrate_runs(pool, range, target);
        const auto achieved = benign_alarm_fraction(pool, knob);
        calibration[mname][group.name] = {{"knob", knob}, {"achieved_fpr", achieved}};
        fs::create_directories(dir / mname / group.name);
        for (std::size_t k = 0; k < group.traces.size(); ++k) {
          write_file(dir / mname / group.name / (two_digits(k) + ".verdicts.jsonl"),
                     verdict_lines(method, *g.attacked[k], group.traces[k].attacked.trace, backend.get(),
                                   config.plan, knob));
        }
      }
      if (r.benign.empty()) continue;
      // Fully benign traces are calibrated on their own timestamps.
      AttackGroup none;
      const GroupAnalyses g = analyze_group(method, none, r.benign, setup, config.workers);
      const auto pool = g.calibration_pool(none);
      const double knob = calibrate_runs(pool, g.range(method), target);
      calibration[mname]["benign"] = {{"knob", knob}, {"achieved_fpr", benign_alarm_fraction(pool, knob)}};
      fs::create_directories(dir / mname / "benign");
      for (std::size_t b = 0; b < r.benign.size(); ++b) {
        write_file(dir / mname / "benign" / (two_digits(b) + ".verdicts.jsonl"),
                   verdict_lines(method, *g.benign[b], r.benign[b], backend.get(), config.plan, knob));
      }
    }
    write_file(dir / "calibration.json", json{{"target_fpr", target}, {"detectors", calibration}}.dump(2) + "\n");
  });
}

void cmd_evaluate(const ScenarioConfig& config) {
  EvaluationTables tables;
  {
    const Replicate r = load_replicate(config);
    evaluate_replicate(config, r, 0, config.workers, tables);
  }
  for (int i = 1; i < config.evaluation.replicates; ++i) {
    const Replicate r = make_replicate(config, replicate_seed(config.seed, i));
    evaluate_replicate(config, r, i, config.workers, tables);
  }
  run_sampling(config, config.workers, tables);
  staged(config, "evaluate", [&](const fs::path& dir) {
    write_file(dir / "roc.csv", roc_csv(tables.roc));
    write_file(dir / "exclusion.csv", exclusion_csv(tables.roc));
    if (std::find(config.detectors.begin(), config.detectors.end(), Method::kGmRaim) != config.detectors.end()) {
      write_file(dir / "recovery.csv", recovery_csv(tables.recovery));
      if (config.evaluation.sampling.enabled) write_file(dir / "sampling.csv", sampling_csv(tables.sampling));
    }
  });
}

void cmd_reproduce(const ScenarioConfig& config) {
  const fs::path out(config.output_dir);
  const char* stages[] = {"scene", "attacks", "detect", "evaluate"};
  try {
    cmd_gen_scene(config);
    cmd_inject(config);
    cmd_detect(config);
    cmd_evaluate(config);
    json files = json::object();
    for (const char* stage : stages) {
      for (const auto& [path, sum] : checksums(out / stage)) files[std::string(stage) + "/" + path] = sum;
    }
    json manifest{{"stage", "reproduce"}, {"config_hash", config_hash(config)}, {"seed", config.seed}, {"files", files}};
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
  } catch (...) {
    std::error_code ignored;
    for (const char* stage : stages) fs::remove_all(out / stage, ignored);
    fs::remove(out / "manifest.json", ignored);
    throw;
  }
}

}  // namespace gmraim
