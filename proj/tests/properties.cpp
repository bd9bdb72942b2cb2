#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gmraim/positioning.hpp"
#include "gmraim/raim.hpp"
#include "gmraim/rng.hpp"

namespace gmraim::properties {

namespace {

void fail(Outcome& out, const std::string& what) {
  if (out.failures++ == 0) out.first_failure = "case " + std::to_string(out.cases) + ": " + what;
}

LocalPoint random_point(Rng& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

PositionEstimate random_estimate(Rng& rng) {
  std::uniform_real_distribution<double> s(0.05, 20.0);
  return {random_point(rng, 100.0), {s(rng), s(rng), s(rng)}};
}

// Estimates drawn per subset from a table; sigma multiplied by `scale`.
class TableSolver final : public SubsetSolver {
 public:
  TableSolver(const std::vector<PositionEstimate>& table, double scale) : table_(table), scale_(scale) {}
  PositionEstimate locate(std::span<const std::size_t> members) const override {
    SubsetMask mask = 0;
    for (std::size_t m : members) mask |= SubsetMask{1} << m;
    PositionEstimate e = table_[mask % table_.size()];
    e.sigma *= scale_;
    return e;
  }

 private:
  const std::vector<PositionEstimate>& table_;
  double scale_;
};

Scan scan_with(std::size_t aps) {
  Scan s;
  for (std::size_t j = 0; j < aps; ++j) s.rssi["ap" + std::to_string(j)] = -50.0 - static_cast<double>(j);
  return s;
}

// Mixture with a few strongly displaced components so that alarms occur.
std::vector<PositionEstimate> random_table(Rng& rng, std::size_t size) {
  std::vector<PositionEstimate> t(size);
  std::bernoulli_distribution outlier(0.15);
  for (auto& e : t) {
    e = random_estimate(rng);
    e.position *= 0.1;
    if (outlier(rng)) e.position += random_point(rng, 80.0);
  }
  return t;
}

double cross(double ox, double oy, double ax, double ay, double bx, double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

// Andrew's monotone chain; counter-clockwise, no collinear points.
std::vector<std::array<double, 2>> hull_2d(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<std::array<double, 2>> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2][0], h[k - 2][1], h[k - 1][0], h[k - 1][1], pts[i][0], pts[i][1]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2][0], h[k - 2][1], h[k - 1][0], h[k - 1][1], pts[i - 1][0], pts[i - 1][1]) <= 0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

bool inside_hull(const std::vector<std::array<double, 2>>& pts, double x, double y, double tol) {
  const auto h = hull_2d(pts);
  if (h.size() == 1) return std::hypot(x - h[0][0], y - h[0][1]) <= tol;
  if (h.size() == 2) {
    const double dx = h[1][0] - h[0][0], dy = h[1][1] - h[0][1];
    const double len = std::hypot(dx, dy);
    const double along = ((x - h[0][0]) * dx + (y - h[0][1]) * dy) / len;
    const double off = std::abs(cross(h[0][0], h[0][1], h[1][0], h[1][1], x, y)) / len;
    return off <= tol && along >= -tol && along <= len + tol;
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& a = h[i];
    const auto& b = h[(i + 1) % h.size()];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    if (cross(a[0], a[1], b[0], b[1], x, y) / len < -tol) return false;
  }
  return true;
}

}  // namespace

Outcome fuse_translation_equivariance(std::uint64_t seed, int cases) {
  Outcome out;
  Rng rng(mix_seed(seed, "fuse_translation"));
  std::uniform_int_distribution<int> count(1, 40);
  for (; out.cases < cases; ++out.cases) {
    std::vector<PositionEstimate> es(count(rng));
    for (auto& e : es) e = random_estimate(rng);
    const LocalPoint shift = random_point(rng, 1000.0);
    auto moved = es;
    for (auto& e : moved) e.position += shift;
    const LocalPoint a = fuse(es) + shift;
    const LocalPoint b = fuse(moved);
    if ((a - b).norm() > 1e-9 * (1.0 + shift.norm())) {
      std::ostringstream m;
      m << "fuse(p + T) differs from fuse(p) + T by " << (a - b).norm();
      fail(out, m.str());
    }
  }
  return out;
}

Outcome verdict_sigma_scale_invariance(std::uint64_t seed, int cases) {
  Outcome out;
  Rng rng(mix_seed(seed, "sigma_scale"));
  std::uniform_int_distribution<std::size_t> aps(3, 8);
  std::uniform_real_distribution<double> scale(0.01, 100.0), n_lambda(0.0, 4.0);
  for (; out.cases < cases; ++out.cases) {
    const Scan scan = scan_with(aps(rng));
    const auto table = random_table(rng, 97);
    RaimParams p;
    p.n_lambda = n_lambda(rng);
    const double c = scale(rng);
    const TimestepVerdict a = decide(build_mixture(scan, TableSolver(table, 1.0), SubsetPlan{}), p);
    const TimestepVerdict b = decide(build_mixture(scan, TableSolver(table, c), SubsetPlan{}), p);
    if (a.alarm != b.alarm || a.flagged != b.flagged || a.rogue != b.rogue || (a.fused - b.fused).norm() > 1e-9) {
      std::ostringstream m;
      m << "verdict changed when every sigma was scaled by " << c;
      fail(out, m.str());
    }
  }
  return out;
}

Outcome flag_set_monotone_in_n_lambda(std::uint64_t seed, int cases) {
  Outcome out;
  Rng rng(mix_seed(seed, "flag_monotone"));
  std::uniform_int_distribution<std::size_t> aps(3, 8);
  std::uniform_real_distribution<double> n_lambda(0.0, 6.0);
  for (; out.cases < cases; ++out.cases) {
    const Scan scan = scan_with(aps(rng));
    const auto table = random_table(rng, 61);
    const TimestepMixture m = build_mixture(scan, TableSolver(table, 1.0), SubsetPlan{});
    double lo = n_lambda(rng), hi = n_lambda(rng);
    if (lo > hi) std::swap(lo, hi);
    RaimParams a, b;
    a.n_lambda = lo;
    b.n_lambda = hi;
    const auto fa = decide(m, a).flagged;
    const auto fb = decide(m, b).flagged;
    if (!std::includes(fa.begin(), fa.end(), fb.begin(), fb.end())) {
      std::ostringstream msg;
      msg << "flagged at n=" << hi << " is not a subset of flagged at n=" << lo;
      fail(out, msg.str());
    }
    if (alarms_at(m, hi) && !alarms_at(m, lo)) fail(out, "alarm at larger n_lambda only");
  }
  return out;
}

Outcome wknn_convex_hull_containment(std::uint64_t seed, int cases) {
  Outcome out;
  Rng rng(mix_seed(seed, "wknn_hull"));
  const GeoPoint origin{30.5283, 114.35, 0.0};
  std::uniform_int_distribution<int> db_size(1, 40), ap_count(1, 6), k_dist(1, 8);
  std::uniform_real_distribution<double> east(0.0, 170.0), north(0.0, 90.0), rss(-95.0, -35.0), dmin(0.1, 5.0);
  std::bernoulli_distribution heard(0.8);
  for (; out.cases < cases; ++out.cases) {
    const int aps = ap_count(rng);
    std::vector<Scan> entries;
    const int n = db_size(rng);
    for (int i = 0; i < n; ++i) {
      Scan s;
      s.t = i;
      for (int j = 0; j < aps; ++j) {
        // Quantized readings make score ties common.
        if (heard(rng)) s.rssi["ap" + std::to_string(j)] = std::round(rss(rng) / 5.0) * 5.0;
      }
      if (s.rssi.empty()) s.rssi["ap0"] = -60.0;
      s.truth = from_local({east(rng), north(rng), 1.2}, origin);
      entries.push_back(std::move(s));
    }
    FingerprintDatabase db(entries);
    FingerprintIndex index(db, origin);
    FingerprintParams p;
    p.k = std::min(k_dist(rng), n);
    p.d_min = dmin(rng);
    RssiMap query;
    for (int j = 0; j < aps; ++j) {
      if (heard(rng)) query["ap" + std::to_string(j)] = std::round(rss(rng) / 5.0) * 5.0;
    }
    if (query.empty()) query["ap0"] = -60.0;

    // Reference neighbour set: scores by direct evaluation, ties to lower t.
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < db.size(); ++i) scored.push_back({similarity(query, db.entries()[i], p), i});
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::array<double, 2>> neighbours;
    double score_sum = 0.0;
    for (int k = 0; k < p.k; ++k) {
      const LocalPoint q = index.position(scored[k].second);
      neighbours.push_back({q.east, q.north});
      score_sum += scored[k].first;
    }
    if (score_sum <= 0.0) {
      --out.cases;  // no fingerprint overlaps the query; redraw
      continue;
    }
    const PositionEstimate e = wknn_position(query, index, p);
    if (!inside_hull(neighbours, e.position.east, e.position.north, 1e-7)) {
      std::ostringstream m;
      m << "estimate (" << e.position.east << ", " << e.position.north << ") outside neighbour hull, K=" << p.k;
      fail(out, m.str());
    }
    const double expected_sigma = std::clamp(p.k / score_sum, kMinSigma, kMaxSigma);
    if (std::abs(e.sigma.east - expected_sigma) > 1e-9 * expected_sigma) fail(out, "uncertainty is not 1/mean score");
  }
  return out;
}

Outcome nls_descent(std::uint64_t seed, int cases) {
  Outcome out;
  Rng rng(mix_seed(seed, "nls_descent"));
  std::uniform_int_distribution<int> count(3, 8);
  std::uniform_real_distribution<double> east(0.0, 170.0), north(0.0, 90.0), up(3.0, 12.0), w(0.005, 1.0);
  for (; out.cases < cases; ++out.cases) {
    std::vector<WeightedAnchor> anchors(count(rng));
    for (auto& a : anchors) a = {{east(rng), north(rng), up(rng)}, w(rng)};
    double sw = 0.0, ce = 0.0, cn = 0.0;
    for (const auto& a : anchors) {
      const double w2 = a.weight * a.weight;
      sw += w2;
      ce += w2 * a.position.east;
      cn += w2 * a.position.north;
    }
    NlsParams p;
    const PositionEstimate e = nls_solve(anchors, p);
    const double h = e.position.up;
    const double start = nls_objective(anchors, ce / sw, cn / sw, h);
    const double end = nls_objective(anchors, e.position.east, e.position.north, h);
    if (end > start * (1.0 + 1e-12) + 1e-15) {
      std::ostringstream m;
      m << "objective rose from " << start << " to " << end;
      fail(out, m.str());
    }
    for (const auto& [dx, dy] : {std::pair{0.5, 0.0}, {-0.5, 0.0}, {0.0, 0.5}, {0.0, -0.5}}) {
      if (nls_objective(anchors, e.position.east + dx, e.position.north + dy, h) < end) {
        fail(out, "a 0.5 m probe lowers the objective");
        break;
      }
    }
  }
  return out;
}

}  // namespace gmraim::properties
