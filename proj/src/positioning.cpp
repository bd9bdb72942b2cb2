#include "gmraim/positioning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "gmraim/error.hpp"

namespace gmraim {

void FingerprintParams::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidConfig, "fingerprint.k must be >= 1");
  if (!(d_min > 0.0)) throw Error(ErrorCode::kInvalidConfig, "fingerprint.d_min must be > 0");
}

void NlsParams::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::kInvalidConfig, "nls.max_iterations must be >= 1");
  if (!(step_tolerance > 0.0)) throw Error(ErrorCode::kInvalidConfig, "nls.step_tolerance must be > 0");
  if (!(damping >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "nls.damping must be >= 0");
  if (!std::isfinite(rss_floor)) throw Error(ErrorCode::kInvalidConfig, "nls.rss_floor must be finite");
}

double similarity(const RssiMap& query, const Scan& fingerprint, const FingerprintParams& params) {
  double score = 0.0;
  for (const auto& [ap, rss] : query) {
    auto it = fingerprint.rssi.find(ap);
    if (it == fingerprint.rssi.end()) continue;
    score += 1.0 / std::max(std::abs(rss - it->second), params.d_min);
  }
  return score;
}

FingerprintIndex::FingerprintIndex(const FingerprintDatabase& db, const GeoPoint& origin) {
  const auto& entries = db.entries();
  positions_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    positions_.push_back(to_local(*entries[i].truth, origin));
    for (const auto& [ap, rss] : entries[i].rssi) {
      auto [it, inserted] = columns_.try_emplace(ap);
      if (inserted) it->second.assign(entries.size(), std::numeric_limits<double>::quiet_NaN());
      it->second[i] = rss;
    }
  }
}

const std::vector<double>* FingerprintIndex::column(const ApId& ap) const {
  auto it = columns_.find(ap);
  return it == columns_.end() ? nullptr : &it->second;
}

PositionEstimate wknn_from_scores(std::span<const double> scores, const FingerprintIndex& index,
                                  const FingerprintParams& params) {
  const std::size_t k = static_cast<std::size_t>(params.k);
  if (index.size() < k) {
    throw Error(ErrorCode::kInvalidConfig, "fingerprint database smaller than K");
  }
  // Top-K by score; scanning in index order keeps the lower time index on ties.
  std::vector<std::size_t> best;
  best.reserve(k + 1);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (best.size() == k && !(scores[i] > scores[best.back()])) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), i, [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b];
    });
    best.insert(pos, i);
    if (best.size() > k) best.pop_back();
  }
  double total = 0.0;
  LocalPoint position;
  for (std::size_t i : best) {
    total += scores[i];
    position += scores[i] * index.position(i);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kAllScoresZero, "no fingerprint overlaps the subset");
  position *= 1.0 / total;
  const double mean = total / static_cast<double>(best.size());
  return PositionEstimate::isotropic(position, std::clamp(1.0 / mean, kMinSigma, kMaxSigma));
}

PositionEstimate wknn_position(const RssiMap& query, const FingerprintIndex& index,
                               const FingerprintParams& params) {
  params.validate();
  std::vector<double> scores(index.size(), 0.0);
  for (const auto& [ap, rss] : query) {
    const auto* column = index.column(ap);
    if (!column) continue;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double fp = (*column)[i];
      if (!std::isnan(fp)) scores[i] += 1.0 / std::max(std::abs(rss - fp), params.d_min);
    }
  }
  return wknn_from_scores(scores, index, params);
}

AnchorSet::AnchorSet(const ApRegistry& registry, const GeoPoint& origin) {
  for (const auto& [ap, geo] : registry.positions()) anchors_.emplace(ap, to_local(geo, origin));
}

const LocalPoint& AnchorSet::at(const ApId& ap) const {
  auto it = anchors_.find(ap);
  if (it == anchors_.end()) throw Error(ErrorCode::kApNotInRegistry, "AP not in registry: " + ap);
  return it->second;
}

double nls_weight(double rss, const NlsParams& params) {
  return 1.0 / std::max(std::abs(rss - params.rss_floor), kMinStrength);
}

double nls_objective(std::span<const WeightedAnchor> anchors, double east, double north, double height) {
  double cost = 0.0;
  for (const auto& a : anchors) {
    const double de = a.position.east - east;
    const double dn = a.position.north - north;
    const double du = a.position.up - height;
    cost += a.weight * a.weight * (de * de + dn * dn + du * du);
  }
  return cost;
}

PositionEstimate nls_solve(std::span<const WeightedAnchor> anchors, const NlsParams& params) {
  if (anchors.size() < 3) {
    throw Error(ErrorCode::kSubsetTooSmall, "distance positioning needs at least 3 APs");
  }
  double sum_w2 = 0.0;
  LocalPoint centroid;
  for (const auto& a : anchors) {
    const double w2 = a.weight * a.weight;
    sum_w2 += w2;
    centroid += w2 * a.position;
  }
  centroid *= 1.0 / sum_w2;
  const double height = centroid.up;

  double east = centroid.east;
  double north = centroid.north;
  double cost = nls_objective(anchors, east, north, height);
  double lambda = params.damping;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    // Residuals r_j = w_j |a_j - p|; Jacobian over (east, north).
    std::array<double, 3> h{0.0, 0.0, 0.0};  // JtJ: [ee, en, nn]
    std::array<double, 2> g{0.0, 0.0};       // Jt r
    for (const auto& a : anchors) {
      const double de = east - a.position.east;
      const double dn = north - a.position.north;
      const double du = height - a.position.up;
      const double dist = std::sqrt(de * de + dn * dn + du * du);
      if (dist == 0.0) continue;
      const double je = a.weight * de / dist;
      const double jn = a.weight * dn / dist;
      const double r = a.weight * dist;
      h[0] += je * je;
      h[1] += je * jn;
      h[2] += jn * jn;
      g[0] += je * r;
      g[1] += jn * r;
    }
    if (std::hypot(g[0], g[1]) < 1e-15 * std::max(1.0, cost)) break;
    const double a00 = h[0] + lambda * (h[0] + 1e-12);
    const double a11 = h[2] + lambda * (h[2] + 1e-12);
    const double det = a00 * a11 - h[1] * h[1];
    if (!(std::abs(det) > 0.0)) break;
    const double step_e = -(a11 * g[0] - h[1] * g[1]) / det;
    const double step_n = -(a00 * g[1] - h[1] * g[0]) / det;
    const double trial = nls_objective(anchors, east + step_e, north + step_n, height);
    if (trial < cost) {
      east += step_e;
      north += step_n;
      cost = trial;
      lambda *= 0.1;
      if (std::hypot(step_e, step_n) < params.step_tolerance) break;
    } else {
      lambda = std::max(lambda, 1e-6) * 10.0;
      if (lambda > 1e12) break;
    }
  }
  const double dof = std::max(static_cast<double>(anchors.size()) - 2.0, 1.0);
  const double sigma = std::clamp(std::sqrt(cost / dof), kMinSigma, kMaxSigma);
  return PositionEstimate::isotropic({east, north, height}, sigma);
}

PositionEstimate nls_position(const RssiMap& query, const AnchorSet& anchors, const NlsParams& params) {
  params.validate();
  if (query.size() < 3) throw Error(ErrorCode::kSubsetTooSmall, "distance positioning needs at least 3 APs");
  std::vector<WeightedAnchor> weighted;
  weighted.reserve(query.size());
  for (const auto& [ap, rss] : query) weighted.push_back({anchors.at(ap), nls_weight(rss, params)});
  return nls_solve(weighted, params);
}

namespace {

class FingerprintSolver final : public SubsetSolver {
 public:
  FingerprintSolver(const Scan& scan, const FingerprintIndex& index, const FingerprintParams& params)
      : index_(index), params_(params) {
    terms_.reserve(scan.rssi.size());
    for (const auto& [ap, rss] : scan.rssi) {
      std::vector<double> term(index.size(), 0.0);
      if (const auto* column = index.column(ap)) {
        for (std::size_t i = 0; i < term.size(); ++i) {
          const double fp = (*column)[i];
          if (!std::isnan(fp)) term[i] = 1.0 / std::max(std::abs(rss - fp), params.d_min);
        }
      }
      terms_.push_back(std::move(term));
    }
  }

  // Consecutive subsets in enumeration order share prefixes, so partial
  // sums are kept per prefix length. Not safe for concurrent locate() calls.
  PositionEstimate locate(std::span<const std::size_t> members) const override {
    if (members.empty()) throw Error(ErrorCode::kSubsetTooSmall, "empty subset");
    std::size_t common = 0;
    while (common < members.size() && common < cached_.size() && cached_[common] == members[common]) ++common;
    cached_.resize(common);
    if (prefix_.size() < members.size()) prefix_.resize(members.size());
    for (std::size_t d = common; d < members.size(); ++d) {
      const auto& term = terms_.at(members[d]);
      auto& sum = prefix_[d];
      sum.resize(term.size());
      if (d == 0) {
        std::copy(term.begin(), term.end(), sum.begin());
      } else {
        const auto& prev = prefix_[d - 1];
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = prev[i] + term[i];
      }
      cached_.push_back(members[d]);
    }
    return wknn_from_scores(prefix_[members.size() - 1], index_, params_);
  }

 private:
  const FingerprintIndex& index_;
  const FingerprintParams& params_;
  std::vector<std::vector<double>> terms_;
  mutable std::vector<std::size_t> cached_;
  mutable std::vector<std::vector<double>> prefix_;
};

class DistanceSolver final : public SubsetSolver {
 public:
  DistanceSolver(const Scan& scan, const AnchorSet& anchors, const NlsParams& params) : params_(params) {
    for (const auto& [ap, rss] : scan.rssi) {
      auto it = anchors.anchors().find(ap);
      known_.push_back(it != anchors.anchors().end());
      ids_.push_back(ap);
      weighted_.push_back({known_.back() ? it->second : LocalPoint{}, nls_weight(rss, params)});
    }
  }

  PositionEstimate locate(std::span<const std::size_t> members) const override {
    std::vector<WeightedAnchor> subset;
    subset.reserve(members.size());
    for (std::size_t m : members) {
      if (!known_.at(m)) throw Error(ErrorCode::kApNotInRegistry, "AP not in registry: " + ids_[m]);
      subset.push_back(weighted_[m]);
    }
    return nls_solve(subset, params_);
  }

 private:
  const NlsParams& params_;
  std::vector<ApId> ids_;
  std::vector<bool> known_;
  std::vector<WeightedAnchor> weighted_;
};

}  // namespace

FingerprintBackend::FingerprintBackend(const FingerprintDatabase& db, const GeoPoint& origin,
                                       FingerprintParams params)
    : index_(db, origin), params_(params) {
  params_.validate();
}

std::unique_ptr<SubsetSolver> FingerprintBackend::bind(const Scan& scan) const {
  return std::make_unique<FingerprintSolver>(scan, index_, params_);
}

DistanceBackend::DistanceBackend(const ApRegistry& registry, const GeoPoint& origin, NlsParams params)
    : anchors_(registry, origin), params_(params) {
  params_.validate();
}

std::unique_ptr<SubsetSolver> DistanceBackend::bind(const Scan& scan) const {
  return std::make_unique<DistanceSolver>(scan, anchors_, params_);
}

}  // namespace gmraim
