#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "gmraim/attack.hpp"
#include "gmraim/io.hpp"
#include "gmraim/scene.hpp"
#include "support.hpp"

using namespace gmraim;
using gmraim::testing::code_of;

namespace {

SceneConfig quiet_config() {
  SceneConfig c;
  c.path_loss.shadowing_sigma = 0.0;
  c.visibility_floor = -200.0;
  c.fingerprint_grid_step = 10.0;
  c.trace_length = 120;
  return c;
}

}  // namespace

TEST(PathLoss, ReferenceDistance) {
  PathLossModel m;
  EXPECT_DOUBLE_EQ(rss_from_distance(m, 1.0, 0.0), -40.0);
}

TEST(PathLoss, TenMetersExponentThree) {
  PathLossModel m;
  m.exponent = 3.0;
  // -40 - 10 * 3 * log10(10)
  EXPECT_NEAR(rss_from_distance(m, 10.0, 0.0), -70.0, 1e-12);
}

TEST(PathLoss, ClampsBelowMinDistance) {
  PathLossModel m;
  EXPECT_EQ(rss_from_distance(m, 0.0, 0.0), rss_from_distance(m, m.min_distance, 0.0));
  EXPECT_EQ(rss_from_distance(m, 0.3, 0.7), rss_from_distance(m, m.min_distance, 0.7));
}

TEST(PathLoss, NoiseScalesWithSigma) {
  PathLossModel m;
  m.shadowing_sigma = 2.5;
  EXPECT_NEAR(rss_from_distance(m, 5.0, 1.0) - rss_from_distance(m, 5.0, 0.0), 2.5, 1e-12);
}

TEST(SceneConfigValidation, RejectsBadValues) {
  SceneConfig c;
  c.ap_count = 2;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidConfig);
  c = SceneConfig{};
  c.width = -1.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidConfig);
  c = SceneConfig{};
  c.path_loss.shadowing_sigma = -1.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidConfig);
}

TEST(SceneGeneration, SameSeedSameScene) {
  SceneConfig c;
  c.fingerprint_grid_step = 10.0;
  const Scene a = generate_scene(c);
  const Scene b = generate_scene(c);
  EXPECT_EQ(a.registry.positions(), b.registry.positions());
  EXPECT_EQ(a.fingerprints.entries(), b.fingerprints.entries());
  EXPECT_EQ(a.trace, b.trace);
  c.rng_seed = 2;
  const Scene other = generate_scene(c);
  EXPECT_NE(other.trace, a.trace);
}

TEST(SceneGeneration, EveryFingerprintSeesAllApsWithoutFloor) {
  SceneConfig c;
  c.visibility_floor = -200.0;
  const Scene s = generate_scene(c);
  ASSERT_EQ(s.registry.size(), 8u);
  EXPECT_EQ(s.fingerprints.size(), 85u * 45u);
  for (const auto& fp : s.fingerprints.entries()) ASSERT_EQ(fp.rssi.size(), 8u);
  for (const auto& scan : s.trace) ASSERT_EQ(scan.rssi.size(), 8u);
}

TEST(SceneGeneration, ApsAndTrajectoryInsideRectangle) {
  for (ApLayout layout : {ApLayout::kUniform, ApLayout::kPerimeter}) {
    SceneConfig c = quiet_config();
    c.layout = layout;
    const Scene s = generate_scene(c);
    for (const auto& [id, g] : s.registry.positions()) {
      const LocalPoint p = to_local(g, c.origin);
      EXPECT_GE(p.east, -1e-6);
      EXPECT_LE(p.east, c.width + 1e-6);
      EXPECT_GE(p.north, -1e-6);
      EXPECT_LE(p.north, c.depth + 1e-6);
      EXPECT_GE(p.up, c.ap_height_min - 1e-6);
      EXPECT_LE(p.up, c.ap_height_max + 1e-6);
    }
    for (const auto& p : make_trajectory(c, 7)) {
      EXPECT_GE(p.east, c.margin - 1e-9);
      EXPECT_LE(p.east, c.width - c.margin + 1e-9);
      EXPECT_GE(p.north, c.margin - 1e-9);
      EXPECT_LE(p.north, c.depth - c.margin + 1e-9);
    }
  }
}

TEST(SceneGeneration, TrajectoryStepsAtWalkingSpeed) {
  SceneConfig c;
  const auto path = make_trajectory(c, 11);
  ASSERT_EQ(path.size(), static_cast<std::size_t>(c.trace_length));
  for (std::size_t i = 1; i < path.size(); ++i) {
    EXPECT_LE((path[i] - path[i - 1]).norm(), c.walking_speed + 1e-9);
  }
}

TEST(SceneGeneration, StraightWalkPastAnApRisesThenFalls) {
  SceneConfig c = quiet_config();
  const Scene base = generate_scene(c);
  const auto& [id, g] = *base.registry.positions().begin();
  const LocalPoint ap = to_local(g, c.origin);
  c.waypoints = {{c.margin, std::clamp(ap.north, c.margin, c.depth - c.margin)},
                 {c.width - c.margin, std::clamp(ap.north, c.margin, c.depth - c.margin)}};
  const Scene s = generate_scene(c);
  std::vector<double> rss;
  for (const auto& scan : s.trace) rss.push_back(scan.rssi.at(id));
  const auto peak = std::max_element(rss.begin(), rss.end()) - rss.begin();
  for (long i = 1; i <= peak; ++i) EXPECT_GE(rss[i], rss[i - 1]) << "t=" << i;
  for (std::size_t i = peak + 1; i < rss.size(); ++i) EXPECT_LE(rss[i], rss[i - 1]) << "t=" << i;
  // The walk reaches the AP's easting, so the peak is not at either end.
  if (ap.east > c.margin + 2 && ap.east < c.margin + 1.2 * (c.trace_length - 1) - 2) {
    EXPECT_GT(peak, 0);
    EXPECT_LT(static_cast<std::size_t>(peak), rss.size() - 1);
  }
}

TEST(SceneGeneration, ScansCarryTruthAndUnheardApsAreAbsent) {
  SceneConfig c;
  c.fingerprint_grid_step = 10.0;
  c.visibility_floor = -80.0;
  const Scene s = generate_scene(c);
  for (const auto& scan : s.trace) {
    ASSERT_TRUE(scan.truth.has_value());
    EXPECT_FALSE(scan.rssi.empty());
    EXPECT_LT(scan.rssi.size(), 9u);
  }
}

TEST(SceneIo, WriteLoadRoundTrip) {
  SceneConfig c;
  c.fingerprint_grid_step = 15.0;
  c.trace_length = 20;
  const Scene s = generate_scene(c);
  const auto dir = std::filesystem::temp_directory_path() / "gmraim_scene_io";
  std::filesystem::remove_all(dir);
  write_scene(dir, s);
  const Scene back = load_scene(dir);
  EXPECT_EQ(back.registry.positions(), s.registry.positions());
  EXPECT_EQ(back.fingerprints.entries(), s.fingerprints.entries());
  EXPECT_EQ(back.trace, s.trace);
  EXPECT_EQ(back.config.origin, s.config.origin);
  std::filesystem::remove_all(dir);
}

namespace {

struct AttackFixture {
  Scene scene;
  ApId target;

  AttackFixture() {
    SceneConfig c = quiet_config();
    scene = generate_scene(c);
    target = scene.registry.positions().begin()->first;
  }
};

}  // namespace

TEST(Attack, DeterministicGainAddsExactly) {
  AttackFixture f;
  AttackSpec spec;
  spec.kind = AttackKind::kAdditiveGain;
  spec.sigma_adv = 0.0;
  spec.mu_adv = 10.0;
  spec.target_ap = f.target;
  spec.rng_seed = 3;
  const auto out = inject(f.scene.trace, spec, f.scene.registry, f.scene.config.path_loss);
  EXPECT_EQ(out.window_length, f.scene.trace.size() / 3);
  for (std::size_t i = 0; i < out.trace.size(); ++i) {
    const bool in_window = i >= out.window_begin && i < out.window_begin + out.window_length;
    EXPECT_EQ(out.labels[i].active, in_window);
    for (const auto& [id, v] : out.trace[i].rssi) {
      const double benign = f.scene.trace[i].rssi.at(id);
      if (in_window && id == f.target) {
        EXPECT_DOUBLE_EQ(v - benign, 10.0);
      } else {
        EXPECT_EQ(v, benign);
      }
    }
    if (in_window) EXPECT_EQ(out.labels[i].rogue_aps, std::set<ApId>{f.target});
    else EXPECT_TRUE(out.labels[i].rogue_aps.empty());
  }
}

TEST(Attack, ReplacementStaysInRange) {
  AttackFixture f;
  AttackSpec spec;
  spec.kind = AttackKind::kReplacement;
  spec.rng_seed = 9;
  const auto out = inject(f.scene.trace, spec, f.scene.registry, f.scene.config.path_loss);
  ASSERT_GT(out.window_length, 0u);
  for (std::size_t i = out.window_begin; i < out.window_begin + out.window_length; ++i) {
    const double v = out.trace[i].rssi.at(out.target);
    EXPECT_GE(v, -70.0);
    EXPECT_LE(v, -55.0);
  }
}

TEST(Attack, TwinAtLegitimatePositionIsInvisible) {
  AttackFixture f;
  AttackSpec spec;
  spec.kind = AttackKind::kPhantomAp;
  spec.target_ap = f.target;
  spec.rogue_position = f.scene.registry.at(f.target);
  spec.rng_seed = 4;
  const auto out = inject(f.scene.trace, spec, f.scene.registry, f.scene.config.path_loss);
  ASSERT_EQ(out.trace.size(), f.scene.trace.size());
  // The twin's range is measured in a frame centred on the client rather than
  // the scene origin; the flat projections differ by well under a millimetre.
  for (std::size_t i = 0; i < out.trace.size(); ++i) {
    for (const auto& [id, v] : out.trace[i].rssi) EXPECT_NEAR(v, f.scene.trace[i].rssi.at(id), 1e-3);
  }
}

TEST(Attack, SameSeedSameInjection) {
  AttackFixture f;
  AttackSpec spec;
  spec.kind = AttackKind::kAdditiveGain;
  spec.rng_seed = 77;
  const auto a = inject(f.scene.trace, spec, f.scene.registry, f.scene.config.path_loss);
  const auto b = inject(f.scene.trace, spec, f.scene.registry, f.scene.config.path_loss);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.target, b.target);
}

TEST(Attack, Errors) {
  AttackFixture f;
  AttackSpec spec;
  spec.target_ap = "nope";
  EXPECT_EQ(code_of([&] { inject(f.scene.trace, spec, f.scene.registry, f.scene.config.path_loss); }),
            ErrorCode::kUnknownTarget);
  spec.target_ap.clear();
  spec.window_fraction = 1.5;
  EXPECT_EQ(code_of([&] { inject(f.scene.trace, spec, f.scene.registry, f.scene.config.path_loss); }),
            ErrorCode::kInvalidConfig);
  spec = AttackSpec{};
  spec.kind = AttackKind::kPhantomAp;
  spec.window_fraction = 1.0;
  Trace no_truth = f.scene.trace;
  no_truth[0].truth.reset();
  EXPECT_EQ(code_of([&] { inject(no_truth, spec, f.scene.registry, f.scene.config.path_loss); }),
            ErrorCode::kMissingTruth);
}

TEST(Attack, SuiteHasSixteenTracesPerKind) {
  AttackFixture f;
  std::vector<std::uint64_t> seeds(kTracesPerKind);
  for (int i = 0; i < kTracesPerKind; ++i) seeds[i] = 100 + i;
  const auto suite = make_attack_suite(f.scene, seeds);
  ASSERT_EQ(suite.size(), 3u * kTracesPerKind);
  int counts[3] = {0, 0, 0};
  for (const auto& st : suite) {
    ++counts[static_cast<int>(st.spec.kind)];
    EXPECT_EQ(st.attacked.labels.size(), st.attacked.trace.size());
    EXPECT_EQ(st.spec.target_ap, st.attacked.target);
  }
  for (int c : counts) EXPECT_EQ(c, kTracesPerKind);
}

TEST(Attack, KindNames) {
  for (AttackKind k : {AttackKind::kAdditiveGain, AttackKind::kReplacement, AttackKind::kPhantomAp}) {
    EXPECT_EQ(attack_kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(code_of([] { attack_kind_from_string("jam"); }), ErrorCode::kInvalidConfig);
}
