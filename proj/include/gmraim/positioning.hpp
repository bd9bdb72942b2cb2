#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gmraim/geo.hpp"

namespace gmraim {

using RssiMap = std::map<ApId, double>;

struct FingerprintParams {
  int k = 3;
  double d_min = 1.0;

  void validate() const;
};

struct NlsParams {
  /// Strength of a reading is |RSS - rss_floor|; weights are its inverse.
  /// rss_floor = 0 gives the raw 1/|RSS| weighting.
  double rss_floor = -100.0;
  int max_iterations = 100;
  double step_tolerance = 1e-4;
  double damping = 1e-3;

  void validate() const;
};

constexpr double kMinSigma = 1e-3;
constexpr double kMaxSigma = 1e3;
/// Lower bound on |RSS - rss_floor| so readings near the floor keep a finite weight.
constexpr double kMinStrength = 1.0;

/// Sum over subset APs heard in `fingerprint` of 1 / max(|dRSS|, d_min).
double similarity(const RssiMap& query, const Scan& fingerprint, const FingerprintParams& params);

/// Fingerprint database laid out column-wise in the local frame.
class FingerprintIndex {
 public:
  FingerprintIndex(const FingerprintDatabase& db, const GeoPoint& origin);

  std::size_t size() const { return positions_.size(); }
  const LocalPoint& position(std::size_t i) const { return positions_[i]; }
  /// RSSI of `ap` for every fingerprint, NaN where not heard; nullptr if never heard.
  const std::vector<double>* column(const ApId& ap) const;

 private:
  std::vector<LocalPoint> positions_;
  std::map<ApId, std::vector<double>> columns_;
};

/// Weighted average of the K best-scoring fingerprints. `scores` holds one
/// value per fingerprint of `index`.
PositionEstimate wknn_from_scores(std::span<const double> scores, const FingerprintIndex& index,
                                  const FingerprintParams& params);

PositionEstimate wknn_position(const RssiMap& query, const FingerprintIndex& index,
                               const FingerprintParams& params);

/// Registry laid out in the local frame.
class AnchorSet {
 public:
  AnchorSet(const ApRegistry& registry, const GeoPoint& origin);
  explicit AnchorSet(std::map<ApId, LocalPoint> anchors) : anchors_(std::move(anchors)) {}

  const LocalPoint& at(const ApId& ap) const;
  const std::map<ApId, LocalPoint>& anchors() const { return anchors_; }

 private:
  std::map<ApId, LocalPoint> anchors_;
};

struct WeightedAnchor {
  LocalPoint position;
  double weight = 1.0;
};

double nls_weight(double rss, const NlsParams& params);

/// sum_j (w_j * |a_j - p|)^2 with p.up ignored in favour of `height`.
double nls_objective(std::span<const WeightedAnchor> anchors, double east, double north, double height);

/// Damped Gauss-Newton on the horizontal position; height is the w^2-weighted
/// mean of anchor heights.
PositionEstimate nls_solve(std::span<const WeightedAnchor> anchors, const NlsParams& params);

PositionEstimate nls_position(const RssiMap& query, const AnchorSet& anchors, const NlsParams& params);

/// Positioning bound to one scan. Members index the scan's APs in sorted order.
class SubsetSolver {
 public:
  virtual ~SubsetSolver() = default;
  virtual PositionEstimate locate(std::span<const std::size_t> members) const = 0;
};

class PositioningBackend {
 public:
  virtual ~PositioningBackend() = default;
  virtual std::unique_ptr<SubsetSolver> bind(const Scan& scan) const = 0;
  virtual std::string name() const = 0;
};

class FingerprintBackend final : public PositioningBackend {
 public:
  FingerprintBackend(const FingerprintDatabase& db, const GeoPoint& origin, FingerprintParams params);

  std::unique_ptr<SubsetSolver> bind(const Scan& scan) const override;
  std::string name() const override { return "fingerprint"; }

 private:
  FingerprintIndex index_;
  FingerprintParams params_;
};

class DistanceBackend final : public PositioningBackend {
 public:
  DistanceBackend(const ApRegistry& registry, const GeoPoint& origin, NlsParams params);

  std::unique_ptr<SubsetSolver> bind(const Scan& scan) const override;
  std::string name() const override { return "distance"; }

 private:
  AnchorSet anchors_;
  NlsParams params_;
};

}  // namespace gmraim
