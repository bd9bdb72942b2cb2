#include "gmraim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "gmraim/config.hpp"
#include "gmraim/error.hpp"
#include "gmraim/io.hpp"
#include "gmraim/rng.hpp"

namespace gmraim {

void PathLossModel::validate() const {
  if (!(exponent >= 1.5 && exponent <= 6.0)) {
    throw Error(ErrorCode::kInvalidConfig, "path_loss.exponent must lie in [1.5, 6]");
  }
  if (!(shadowing_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "path_loss.shadowing_sigma must be >= 0");
  }
  if (!(min_distance > 0.0)) throw Error(ErrorCode::kInvalidConfig, "path_loss.min_distance must be > 0");
  if (!std::isfinite(rss_at_1m)) throw Error(ErrorCode::kInvalidConfig, "path_loss.rss_at_1m not finite");
}

double rss_from_distance(const PathLossModel& model, double distance, double noise_draw) {
  const double d = std::max(distance, model.min_distance);
  return model.rss_at_1m - 10.0 * model.exponent * std::log10(d) + model.shadowing_sigma * noise_draw;
}

void SceneConfig::validate() const {
  if (!origin.valid()) throw Error(ErrorCode::kInvalidConfig, "scene.origin invalid");
  if (ap_count < 4) throw Error(ErrorCode::kInvalidConfig, "scene.ap_count must be >= 4");
  if (ap_count > 26) throw Error(ErrorCode::kInvalidConfig, "scene.ap_count must be <= 26");
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidConfig, std::string("scene.") + name + " must be > 0");
    }
  };
  positive(width, "width");
  positive(depth, "depth");
  positive(fingerprint_grid_step, "fingerprint_grid_step");
  positive(walking_speed, "walking_speed");
  if (fingerprint_samples < 1) throw Error(ErrorCode::kInvalidConfig, "scene.fingerprint_samples must be >= 1");
  if (trace_length < 1) throw Error(ErrorCode::kInvalidConfig, "scene.trace_length must be >= 1");
  if (!(ap_height_min <= ap_height_max)) {
    throw Error(ErrorCode::kInvalidConfig, "scene.ap_height_min must not exceed ap_height_max");
  }
  if (!(margin >= 0.0) || 2 * margin >= std::min(width, depth)) {
    throw Error(ErrorCode::kInvalidConfig, "scene.margin does not fit the rectangle");
  }
  if (waypoints.empty() && random_waypoints < 2) {
    throw Error(ErrorCode::kInvalidConfig, "scene.random_waypoints must be >= 2");
  }
  path_loss.validate();
}

namespace {

std::string ap_name(int index) {
  std::string id = "ap";
  if (index + 1 < 10) id += '0';
  id += std::to_string(index + 1);
  return id;
}

std::map<ApId, GeoPoint> place_aps(const SceneConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> height(config.ap_height_min, config.ap_height_max);
  std::map<ApId, GeoPoint> aps;
  if (config.layout == ApLayout::kUniform) {
    std::uniform_real_distribution<double> east(config.margin, config.width - config.margin);
    std::uniform_real_distribution<double> north(config.margin, config.depth - config.margin);
    for (int i = 0; i < config.ap_count; ++i) {
      LocalPoint p{east(rng), north(rng), 0.0};
      p.up = height(rng);
      aps.emplace(ap_name(i), from_local(p, config.origin));
    }
    return aps;
  }
  // Evenly spaced along the inset perimeter, with a random phase.
  const double w = config.width - 2 * config.margin;
  const double d = config.depth - 2 * config.margin;
  const double perimeter = 2 * (w + d);
  const double phase = std::uniform_real_distribution<double>(0.0, perimeter)(rng);
  for (int i = 0; i < config.ap_count; ++i) {
    double s = std::fmod(phase + perimeter * i / config.ap_count, perimeter);
    LocalPoint p;
    if (s < w) {
      p = {config.margin + s, config.margin, 0.0};
    } else if (s < w + d) {
      p = {config.margin + w, config.margin + (s - w), 0.0};
    } else if (s < 2 * w + d) {
      p = {config.margin + w - (s - w - d), config.margin + d, 0.0};
    } else {
      p = {config.margin, config.margin + d - (s - 2 * w - d), 0.0};
    }
    p.up = height(rng);
    aps.emplace(ap_name(i), from_local(p, config.origin));
  }
  return aps;
}

std::vector<std::pair<ApId, LocalPoint>> local_aps(const Scene& scene) {
  std::vector<std::pair<ApId, LocalPoint>> out;
  for (const auto& [id, geo] : scene.registry.positions()) {
    out.emplace_back(id, to_local(geo, scene.config.origin));
  }
  return out;
}

}  // namespace

std::vector<LocalPoint> make_trajectory(const SceneConfig& config, std::uint64_t seed) {
  Rng rng(mix_seed(seed, "trajectory"));
  std::uniform_real_distribution<double> east(config.margin, config.width - config.margin);
  std::uniform_real_distribution<double> north(config.margin, config.depth - config.margin);

  std::vector<std::array<double, 2>> waypoints = config.waypoints;
  if (waypoints.empty()) {
    for (int i = 0; i < config.random_waypoints; ++i) waypoints.push_back({east(rng), north(rng)});
  }

  std::vector<LocalPoint> out;
  out.reserve(config.trace_length);
  std::size_t leg = 0;
  double along = 0.0;  // distance already travelled on the current leg
  std::array<double, 2> here = waypoints.front();
  out.push_back({here[0], here[1], config.client_height});
  while (static_cast<int>(out.size()) < config.trace_length) {
    double remaining = config.walking_speed;
    while (remaining > 0.0) {
      if (leg + 1 >= waypoints.size()) {
        if (!config.waypoints.empty()) {
          remaining = 0.0;  // fixed path exhausted: stand still at its end
          break;
        }
        waypoints.push_back({east(rng), north(rng)});
      }
      const auto& a = waypoints[leg];
      const auto& b = waypoints[leg + 1];
      const double length = std::hypot(b[0] - a[0], b[1] - a[1]);
      if (along + remaining < length) {
        along += remaining;
        remaining = 0.0;
        const double f = along / length;
        here = {a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])};
      } else {
        remaining -= length - along;
        along = 0.0;
        ++leg;
        here = b;
      }
    }
    out.push_back({here[0], here[1], config.client_height});
  }
  return out;
}

Trace simulate_trace(const Scene& scene, const std::vector<LocalPoint>& trajectory, std::uint64_t seed) {
  const auto aps = local_aps(scene);
  const auto& model = scene.config.path_loss;
  Rng rng(mix_seed(seed, "shadowing"));
  std::normal_distribution<double> noise(0.0, 1.0);
  Trace trace;
  trace.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    Scan scan;
    scan.t = static_cast<std::int64_t>(i);
    scan.truth = from_local(trajectory[i], scene.config.origin);
    for (const auto& [id, ap] : aps) {
      const double d = (ap - trajectory[i]).norm();
      const double draw = noise(rng);
      if (rss_from_distance(model, d, 0.0) > scene.config.visibility_floor) {
        scan.rssi.emplace(id, rss_from_distance(model, d, draw));
      }
    }
    // Nothing heard at this position: no scan is recorded.
    if (!scan.rssi.empty()) trace.push_back(std::move(scan));
  }
  return trace;
}

Trace simulate_trace(const Scene& scene, std::uint64_t seed) {
  return simulate_trace(scene, make_trajectory(scene.config, seed), seed);
}

Scene generate_scene(const SceneConfig& config) {
  config.validate();
  Scene scene;
  scene.config = config;
  Rng rng(mix_seed(config.rng_seed, "aps"));
  scene.registry = ApRegistry(place_aps(config, rng));

  const auto aps = local_aps(scene);
  const auto& model = config.path_loss;
  Rng fp_rng(mix_seed(config.rng_seed, "fingerprints"));
  std::normal_distribution<double> noise(0.0, 1.0);
  const double step = config.fingerprint_grid_step;
  const int columns = std::max(1, static_cast<int>(std::ceil(config.width / step - 1e-9)));
  const int rows = std::max(1, static_cast<int>(std::ceil(config.depth / step - 1e-9)));
  std::vector<Scan> entries;
  entries.reserve(static_cast<std::size_t>(columns) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < columns; ++c) {
      const LocalPoint cell{std::min(step * (c + 0.5), config.width),
                            std::min(step * (r + 0.5), config.depth), config.client_height};
      Scan fp;
      fp.t = static_cast<std::int64_t>(entries.size());
      fp.truth = from_local(cell, config.origin);
      for (const auto& [id, ap] : aps) {
        const double d = (ap - cell).norm();
        double mean_draw = 0.0;
        for (int k = 0; k < config.fingerprint_samples; ++k) mean_draw += noise(fp_rng);
        mean_draw /= config.fingerprint_samples;
        if (rss_from_distance(model, d, 0.0) > config.visibility_floor) {
          fp.rssi.emplace(id, rss_from_distance(model, d, mean_draw));
        }
      }
      if (!fp.rssi.empty()) entries.push_back(std::move(fp));
    }
  }
  scene.fingerprints = FingerprintDatabase(std::move(entries));
  scene.trace = simulate_trace(scene, config.rng_seed);
  return scene;
}

std::vector<std::filesystem::path> write_scene(const std::filesystem::path& dir, const Scene& scene) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written{dir / "scene.json", dir / "registry.csv",
                                             dir / "fingerprints.jsonl", dir / "trace.jsonl"};
  nlohmann::json meta;
  meta["origin"] = {scene.config.origin.latitude, scene.config.origin.longitude,
                    scene.config.origin.height};
  meta["seed"] = scene.config.rng_seed;
  meta["config"] = scene.config;
  write_file(written[0], meta.dump() + "\n");
  save_registry(written[1], scene.registry);
  save_fingerprints(written[2], scene.fingerprints);
  save_trace(written[3], scene.trace);
  return written;
}

Scene load_scene(const std::filesystem::path& dir) {
  Scene scene;
  const std::string text = read_file(dir / "scene.json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text.substr(0, text.find('\n')));
    scene.config = meta.at("config").get<SceneConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, (dir / "scene.json").string() + ":1: " + e.what());
  }
  scene.config.origin = load_origin(dir / "scene.json");
  scene.registry = load_registry(dir / "registry.csv");
  scene.fingerprints = load_fingerprints(dir / "fingerprints.jsonl");
  scene.trace = load_trace(dir / "trace.jsonl");
  return scene;
}

}  // namespace gmraim
