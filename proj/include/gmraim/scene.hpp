#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gmraim/geo.hpp"

namespace gmraim {

/// Log-distance path loss with log-normal shadowing.
struct PathLossModel {
  double rss_at_1m = -40.0;
  double exponent = 3.0;
  double shadowing_sigma = 2.0;
  double min_distance = 1.0;

  void validate() const;
};

/// rss_at_1m - 10 n log10(max(d, min_distance)) + shadowing_sigma * noise_draw
double rss_from_distance(const PathLossModel& model, double distance, double noise_draw);

enum class ApLayout { kUniform, kPerimeter };

struct SceneConfig {
  GeoPoint origin{30.52830, 114.35000, 0.0};
  double width = 170.0;
  double depth = 90.0;
  int ap_count = 8;
  ApLayout layout = ApLayout::kUniform;
  double ap_height_min = 3.0;
  double ap_height_max = 12.0;
  PathLossModel path_loss;
  double fingerprint_grid_step = 2.0;
  int fingerprint_samples = 10;
  double visibility_floor = -95.0;
  double client_height = 1.2;
  int trace_length = 300;
  double walking_speed = 1.2;
  /// Local (east, north) waypoints; empty means a seeded random walk.
  std::vector<std::array<double, 2>> waypoints;
  int random_waypoints = 6;
  double margin = 5.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct Scene {
  SceneConfig config;
  ApRegistry registry;
  FingerprintDatabase fingerprints;
  Trace trace;
};

Scene generate_scene(const SceneConfig& config);

/// Client positions at 1 Hz; the random walk is drawn from `seed`.
std::vector<LocalPoint> make_trajectory(const SceneConfig& config, std::uint64_t seed);

/// Benign scans along `trajectory` with shadowing drawn from `seed`.
Trace simulate_trace(const Scene& scene, const std::vector<LocalPoint>& trajectory,
                     std::uint64_t seed);

/// A fresh benign trace over the scene's APs: trajectory and noise from `seed`.
Trace simulate_trace(const Scene& scene, std::uint64_t seed);

/// Writes registry.csv, fingerprints.jsonl, trace.jsonl and scene.json.
std::vector<std::filesystem::path> write_scene(const std::filesystem::path& dir, const Scene& scene);
Scene load_scene(const std::filesystem::path& dir);

}  // namespace gmraim
