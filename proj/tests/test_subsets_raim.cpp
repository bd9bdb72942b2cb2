#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "gmraim/attack.hpp"
#include "gmraim/raim.hpp"
#include "gmraim/scene.hpp"
#include "gmraim/subsets.hpp"
#include "support.hpp"

using namespace gmraim;
using gmraim::testing::code_of;

namespace {

// Pascal's triangle, independent of binomial().
std::uint64_t pascal(int n, int k) {
  std::vector<std::vector<std::uint64_t>> c(n + 1, std::vector<std::uint64_t>(n + 1, 0));
  for (int i = 0; i <= n; ++i) {
    c[i][0] = 1;
    for (int j = 1; j <= i; ++j) c[i][j] = c[i - 1][j - 1] + (j <= i - 1 ? c[i - 1][j] : 0);
  }
  return c[n][k];
}

std::set<ApId> ids(std::initializer_list<const char*> names) { return {names.begin(), names.end()}; }

}  // namespace

TEST(Subsets, EightApsGive219) {
  std::uint64_t oracle = 0;
  for (int k = 3; k <= 8; ++k) oracle += pascal(8, k);
  EXPECT_EQ(oracle, 219u);
  EXPECT_EQ(enumerate_indices(8, SubsetPlan{}).size(), oracle);
  EXPECT_EQ(binomial(8, 3), 56u);
  EXPECT_EQ(binomial(8, 9), 0u);
}

TEST(Subsets, ThreeApsGiveOnlyTheFullSet) {
  const auto s = enumerate(ids({"a", "b", "c"}), SubsetPlan{});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (std::vector<ApId>{"a", "b", "c"}));
}

TEST(Subsets, FourApsEnumerationOrder) {
  const auto s = enumerate(ids({"1", "2", "3", "4"}), SubsetPlan{});
  const std::vector<std::vector<ApId>> expected{
      {"1", "2", "3"}, {"1", "2", "4"}, {"1", "3", "4"}, {"2", "3", "4"}, {"1", "2", "3", "4"}};
  EXPECT_EQ(s, expected);
}

TEST(Subsets, MaxSizeAndTooFewAps) {
  SubsetPlan plan;
  plan.max_size = 4;
  EXPECT_EQ(enumerate_indices(8, plan).size(), pascal(8, 3) + pascal(8, 4));
  EXPECT_EQ(code_of([] { enumerate_indices(2, SubsetPlan{}); }), ErrorCode::kTooFewAps);
}

TEST(Subsets, PlanValidation) {
  SubsetPlan plan;
  plan.min_size = 2;
  EXPECT_EQ(code_of([&] { plan.validate(); }), ErrorCode::kInvalidConfig);
  plan = SubsetPlan{};
  plan.sampling_ratio = 0.0;
  EXPECT_EQ(code_of([&] { plan.validate(); }), ErrorCode::kInvalidConfig);
  plan = SubsetPlan{};
  plan.min_size = 5;
  plan.max_size = 4;
  EXPECT_EQ(code_of([&] { plan.validate(); }), ErrorCode::kInvalidConfig);
}

TEST(Sampling, FullRatioIsIdentity) {
  const auto all = enumerate_indices(8, SubsetPlan{});
  const auto picked = sample(all, SubsetPlan{}, 7);
  EXPECT_EQ(picked, all);
}

TEST(Sampling, QuarterOf219IsDeterministic55) {
  const auto all = enumerate_indices(8, SubsetPlan{});
  SubsetPlan plan;
  plan.sampling_ratio = 0.25;
  plan.rng_seed = 42;
  const auto a = sample_positions(all, plan, 3);
  EXPECT_EQ(a.size(), static_cast<std::size_t>(std::ceil(0.25 * 219)));
  EXPECT_EQ(a.size(), 55u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_EQ(sample_positions(all, plan, 3), a);
  EXPECT_NE(sample_positions(all, plan, 4), a);
  plan.rng_seed = 43;
  EXPECT_NE(sample_positions(all, plan, 3), a);
}

TEST(Sampling, KeepsEverySizeClass) {
  const auto all = enumerate_indices(8, SubsetPlan{});
  SubsetPlan plan;
  plan.sampling_ratio = 0.01;
  for (std::uint64_t stream = 0; stream < 200; ++stream) {
    std::set<std::size_t> sizes;
    for (std::size_t p : sample_positions(all, plan, stream)) sizes.insert(all[p].size());
    EXPECT_EQ(sizes.size(), 6u);
  }
}

TEST(Sampling, UniformWithinSizeClass) {
  const auto all = enumerate_indices(8, SubsetPlan{});
  SubsetPlan plan;
  plan.sampling_ratio = 0.25;
  plan.rng_seed = 9;
  constexpr int kDraws = 4000;
  std::vector<int> hits(all.size(), 0);
  for (int s = 0; s < kDraws; ++s) {
    for (std::size_t p : sample_positions(all, plan, s)) ++hits[p];
  }
  // Within a size class every subset must be equally likely; compare each
  // count to its class mean with a 5-sigma binomial band.
  for (std::size_t size = 3; size <= 8; ++size) {
    std::vector<int> cls;
    for (std::size_t p = 0; p < all.size(); ++p) {
      if (all[p].size() == size) cls.push_back(hits[p]);
    }
    const double mean = std::accumulate(cls.begin(), cls.end(), 0.0) / cls.size();
    const double q = mean / kDraws;
    const double band = 5.0 * std::sqrt(kDraws * q * (1.0 - q)) + 1e-9;
    for (int h : cls) EXPECT_NEAR(h, mean, band) << "size " << size;
  }
}

TEST(Fuse, SingleComponent) {
  const auto e = PositionEstimate::isotropic({1.5, -2.0, 3.0}, 4.0);
  EXPECT_EQ(fuse(std::vector{e}), e.position);
}

TEST(Fuse, TwoComponentExample) {
  const std::vector<PositionEstimate> es{PositionEstimate::isotropic({0, 0, 0}, 1.0),
                                         PositionEstimate::isotropic({3, 3, 3}, 3.0)};
  // (0 / 1 + 3 / 3) / (1 / 1 + 1 / 3)
  const LocalPoint p = fuse(es);
  EXPECT_DOUBLE_EQ(p.east, 0.75);
  EXPECT_DOUBLE_EQ(p.north, 0.75);
  EXPECT_DOUBLE_EQ(p.up, 0.75);
}

TEST(Fuse, PerAxisWeights) {
  const std::vector<PositionEstimate> es{{{0, 0, 0}, {1, 2, 4}}, {{6, 6, 6}, {2, 1, 4}}};
  const LocalPoint p = fuse(es);
  EXPECT_DOUBLE_EQ(p.east, (6.0 / 2) / (1.0 + 0.5));
  EXPECT_DOUBLE_EQ(p.north, 6.0 / (0.5 + 1.0));
  EXPECT_DOUBLE_EQ(p.up, 3.0);
}

TEST(Fuse, IdenticalComponents) {
  const auto e = PositionEstimate::isotropic({7.25, 1.0, -3.5}, 0.7);
  const std::vector<PositionEstimate> es(9, e);
  const LocalPoint p = fuse(es);
  EXPECT_NEAR((p - e.position).norm(), 0.0, 1e-12);
}

TEST(Fuse, EmptyMixture) {
  EXPECT_EQ(code_of([] { fuse(std::vector<PositionEstimate>{}); }), ErrorCode::kEmptyMixture);
}

TEST(Deviations, Basics) {
  const std::vector<PositionEstimate> es{PositionEstimate::isotropic({0, 0, 0}, 1.0),
                                         PositionEstimate::isotropic({3, 4, 0}, 1.0)};
  const auto d = deviations(es, {0, 0, 0});
  EXPECT_EQ(d[0], 0.0);
  EXPECT_DOUBLE_EQ(d[1], 5.0);
  const std::vector<PositionEstimate> sym{PositionEstimate::isotropic({-2, 1, 0}, 1.5),
                                          PositionEstimate::isotropic({2, -1, 0}, 1.5)};
  const auto ds = deviations(sym, fuse(sym));
  EXPECT_DOUBLE_EQ(ds[0], ds[1]);
}

TEST(Threshold, ZeroVariance) {
  const std::vector<double> ds{2, 2, 2, 2};
  for (double n : {0.0, 1.0, 3.5}) {
    RaimParams p;
    p.n_lambda = n;
    EXPECT_DOUBLE_EQ(threshold(ds, p), 2.0);
    EXPECT_TRUE(flag_subsets(ds, threshold(ds, p)).empty());
  }
}

TEST(Threshold, WorkedExample) {
  const std::vector<double> ds{1, 1, 1, 10};
  // Two-pass population moments.
  double mean = 0.0;
  for (double d : ds) mean += d;
  mean /= ds.size();
  double var = 0.0;
  for (double d : ds) var += (d - mean) * (d - mean);
  var /= ds.size();
  EXPECT_DOUBLE_EQ(mean, 3.25);
  EXPECT_DOUBLE_EQ(var, 15.1875);
  RaimParams p;
  p.n_lambda = 1.0;
  const double lambda = threshold(ds, p);
  EXPECT_NEAR(lambda, mean + std::sqrt(var), 1e-12);
  EXPECT_NEAR(lambda, 7.1472, 1e-4);
  EXPECT_EQ(flag_subsets(ds, lambda), (std::vector<std::size_t>{3}));
}

TEST(Threshold, ZeroFactorIsMean) {
  const std::vector<double> ds{0.5, 4.0, 2.5};
  RaimParams p;
  p.n_lambda = 0.0;
  EXPECT_DOUBLE_EQ(threshold(ds, p), 7.0 / 3.0);
}

TEST(Threshold, StrictVersusInclusive) {
  const std::vector<double> ds{2, 2, 2, 2};
  EXPECT_TRUE(flag_subsets(ds, 2.0, true).empty());
  EXPECT_EQ(flag_subsets(ds, 2.0, false).size(), 4u);
}

TEST(Intersection, Cases) {
  EXPECT_TRUE(exclude_intersection({}).empty());
  const std::vector<std::vector<ApId>> flagged{{"1", "3"}, {"2", "3"}, {"3", "4"}, {"1", "2", "3"}, {"1", "3", "4"}, {"2", "3", "4"}};
  EXPECT_EQ(exclude_intersection(flagged), ids({"3"}));
  EXPECT_TRUE(exclude_intersection({{"1", "2"}, {"3", "4"}}).empty());
}

namespace {

// All subsets of {1,2,3,4} of sizes 2 and 3.
std::vector<std::vector<ApId>> small_family() {
  std::vector<std::vector<ApId>> out;
  const std::vector<ApId> aps{"1", "2", "3", "4"};
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<ApId> s;
    for (int b = 0; b < 4; ++b) {
      if (mask & (1 << b)) s.push_back(aps[b]);
    }
    if (s.size() == 2 || s.size() == 3) out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Vote, SixSubsetsContainingThree) {
  const auto family = small_family();
  ASSERT_EQ(family.size(), 10u);
  std::vector<std::size_t> flagged;
  for (std::size_t l = 0; l < family.size(); ++l) {
    if (std::count(family[l].begin(), family[l].end(), "3")) flagged.push_back(l);
  }
  ASSERT_EQ(flagged.size(), 6u);
  // Oracle tallies: AP 3 has A = 6, B = 0; every other AP has A = 3, B = 3.
  for (const ApId j : {"1", "2", "4"}) {
    int a = 0, b = 0;
    for (std::size_t l = 0; l < family.size(); ++l) {
      if (!std::count(family[l].begin(), family[l].end(), j)) continue;
      (std::find(flagged.begin(), flagged.end(), l) != flagged.end() ? a : b)++;
    }
    EXPECT_EQ(a, 3);
    EXPECT_EQ(b, 3);
  }
  EXPECT_EQ(exclude_vote(family, flagged), ids({"3"}));
}

TEST(Vote, NothingFlagged) { EXPECT_TRUE(exclude_vote(small_family(), {}).empty()); }

TEST(Vote, EverythingFlagged) {
  const auto family = small_family();
  std::vector<std::size_t> all(family.size());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(exclude_vote(family, all), ids({"1", "2", "3", "4"}));
}

TEST(Masks, RoundTrip) {
  for (const auto& s : enumerate_indices(6, SubsetPlan{})) EXPECT_EQ(from_mask(to_mask(s)), s);
}

namespace {

struct GridFixture {
  Scene scene;
  std::unique_ptr<FingerprintBackend> backend;

  GridFixture() {
    SceneConfig c;
    c.path_loss.shadowing_sigma = 0.0;
    c.visibility_floor = -200.0;
    c.fingerprint_grid_step = 5.0;
    c.trace_length = 10;
    scene = generate_scene(c);
    FingerprintParams p;
    p.k = 1;
    p.d_min = 0.01;
    backend = std::make_unique<FingerprintBackend>(scene.fingerprints, c.origin, p);
  }

  const Scan& grid_scan(std::size_t i) const { return scene.fingerprints.entries()[i]; }
};

}  // namespace

TEST(DetectTimestep, BenignZeroNoiseScan) {
  GridFixture f;
  const Scan& scan = f.grid_scan(400);
  const auto v = detect_timestep(scan, *f.backend, SubsetPlan{}, RaimParams{});
  EXPECT_FALSE(v.alarm);
  EXPECT_TRUE(v.rogue.empty());
  ASSERT_TRUE(v.recovered.has_value());
  const LocalPoint truth = to_local(*scan.truth, f.scene.config.origin);
  EXPECT_LT((v.recovered->position - truth).norm(), 1.0);
  EXPECT_NEAR((v.fused - truth).norm(), 0.0, 1e-6);
}

TEST(DetectTimestep, MinimumSizeScanCannotAlarm) {
  GridFixture f;
  Scan scan = f.grid_scan(123);
  while (scan.rssi.size() > 3) scan.rssi.erase(scan.rssi.begin());
  scan.rssi.begin()->second += 25.0;
  RaimParams p;
  p.n_lambda = 0.0;
  const auto v = detect_timestep(scan, *f.backend, SubsetPlan{}, p);
  ASSERT_EQ(v.deviations.size(), 1u);
  EXPECT_NEAR(v.deviations[0], 0.0, 1e-9);
  EXPECT_FALSE(v.alarm);
}

TEST(DetectTimestep, TooFewAps) {
  GridFixture f;
  Scan scan = f.grid_scan(5);
  while (scan.rssi.size() > 2) scan.rssi.erase(scan.rssi.begin());
  EXPECT_EQ(code_of([&] { detect_timestep(scan, *f.backend, SubsetPlan{}, RaimParams{}); }), ErrorCode::kTooFewAps);
}

TEST(DetectTimestep, ReplacedReadingOnZeroNoiseSceneAlarms) {
  SceneConfig c;
  c.path_loss.shadowing_sigma = 0.0;
  c.visibility_floor = -200.0;
  c.layout = ApLayout::kPerimeter;
  c.trace_length = 60;
  c.fingerprint_grid_step = 20.0;
  const Scene scene = generate_scene(c);
  NlsParams np;
  np.rss_floor = -45.0;
  DistanceBackend backend(scene.registry, c.origin, np);
  AttackSpec spec;
  spec.kind = AttackKind::kReplacement;
  spec.rng_seed = 21;
  spec.window_fraction = 1.0;
  const auto attacked = inject(scene.trace, spec, scene.registry, c.path_loss);
  RaimParams p;
  p.n_lambda = 1.0;
  for (const auto& scan : attacked.trace) EXPECT_TRUE(detect_timestep(scan, backend, SubsetPlan{}, p).alarm);
}

namespace {

// Subsets of up to five APs that contain `rogue` land 20 m east with a wide
// spread; everything else reports the true position.
class CorruptedSolver final : public SubsetSolver {
 public:
  explicit CorruptedSolver(std::size_t rogue) : rogue_(rogue) {}
  PositionEstimate locate(std::span<const std::size_t> members) const override {
    const bool hit = std::find(members.begin(), members.end(), rogue_) != members.end();
    if (hit && members.size() <= 5) return PositionEstimate::isotropic({20.0, 0.0, 0.0}, 20.0);
    return PositionEstimate::isotropic({0.0, 0.0, 0.0}, 1.0);
  }

 private:
  std::size_t rogue_;
};

}  // namespace

TEST(Decide, ConstructedReplacementMixtureVotesOutTarget) {
  Scan scan;
  for (int j = 0; j < 8; ++j) scan.rssi["ap" + std::to_string(j)] = -60.0 - j;
  const CorruptedSolver solver(3);
  const TimestepMixture m = build_mixture(scan, solver, SubsetPlan{});
  ASSERT_EQ(m.estimates.size(), 219u);
  RaimParams p;
  p.n_lambda = 1.0;
  const TimestepVerdict v = decide(m, p);
  EXPECT_TRUE(v.alarm);
  // 91 corrupted subsets of sizes 3..5 against 29 larger ones containing ap3.
  EXPECT_EQ(v.flagged.size(), 91u);
  EXPECT_EQ(v.rogue, ids({"ap3"}));
}

TEST(Decide, AlarmsAtAgreesWithDecide) {
  Scan scan;
  for (int j = 0; j < 6; ++j) scan.rssi["ap" + std::to_string(j)] = -60.0 - j;
  const CorruptedSolver solver(1);
  const TimestepMixture m = build_mixture(scan, solver, SubsetPlan{});
  for (double n = 0.0; n <= 6.0; n += 0.125) {
    RaimParams p;
    p.n_lambda = n;
    EXPECT_EQ(decide(m, p).alarm, alarms_at(m, n)) << n;
  }
}

TEST(RecoverPosition, ExcludesAndRequiresMinimum) {
  Scan scan;
  for (int j = 0; j < 4; ++j) scan.rssi["ap" + std::to_string(j)] = -60.0;
  const CorruptedSolver solver(0);
  const auto all = recover_position(scan, solver, {}, SubsetPlan{});
  ASSERT_TRUE(all.has_value());
  EXPECT_EQ(all->position, (LocalPoint{20.0, 0.0, 0.0}));
  const auto clean = recover_position(scan, solver, {"ap0"}, SubsetPlan{});
  ASSERT_TRUE(clean.has_value());
  EXPECT_EQ(clean->position, (LocalPoint{0.0, 0.0, 0.0}));
  EXPECT_FALSE(recover_position(scan, solver, {"ap0", "ap1"}, SubsetPlan{}).has_value());
}
