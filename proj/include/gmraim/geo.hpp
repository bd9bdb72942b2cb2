#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gmraim {

using ApId = std::string;

constexpr double kEarthRadius = 6'371'000.0;

/// WGS-84 position: degrees, degrees, meters.
struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
  double height = 0.0;

  bool valid() const;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// East/north/up offsets in meters from a scene origin.
struct LocalPoint {
  double east = 0.0;
  double north = 0.0;
  double up = 0.0;

  double& operator[](std::size_t axis) { return axis == 0 ? east : axis == 1 ? north : up; }
  double operator[](std::size_t axis) const { return axis == 0 ? east : axis == 1 ? north : up; }

  LocalPoint& operator+=(const LocalPoint& o) {
    east += o.east;
    north += o.north;
    up += o.up;
    return *this;
  }
  LocalPoint& operator-=(const LocalPoint& o) {
    east -= o.east;
    north -= o.north;
    up -= o.up;
    return *this;
  }
  LocalPoint& operator*=(double s) {
    east *= s;
    north *= s;
    up *= s;
    return *this;
  }
  friend LocalPoint operator+(LocalPoint a, const LocalPoint& b) { return a += b; }
  friend LocalPoint operator-(LocalPoint a, const LocalPoint& b) { return a -= b; }
  friend LocalPoint operator*(LocalPoint a, double s) { return a *= s; }
  friend LocalPoint operator*(double s, LocalPoint a) { return a *= s; }
  friend bool operator==(const LocalPoint&, const LocalPoint&) = default;

  double norm() const { return std::sqrt(east * east + north * north + up * up); }
  double horizontal_norm() const { return std::hypot(east, north); }
  bool finite() const { return std::isfinite(east) && std::isfinite(north) && std::isfinite(up); }
};

/// Equirectangular projection around `origin`.
LocalPoint to_local(const GeoPoint& p, const GeoPoint& origin);
GeoPoint from_local(const LocalPoint& p, const GeoPoint& origin);

/// One timestamp of RSSI readings. An AP that was not heard is absent from
/// `rssi`; there is no sentinel value.
struct Scan {
  std::int64_t t = 0;
  std::map<ApId, double> rssi;
  std::optional<GeoPoint> truth;

  friend bool operator==(const Scan&, const Scan&) = default;
};

using Trace = std::vector<Scan>;

/// Throws Error(kInvalidField) describing the first violated invariant.
void validate_scan(const Scan& scan);

/// Pre-surveyed scans with known positions. Entries are kept sorted by t.
class FingerprintDatabase {
 public:
  FingerprintDatabase() = default;
  explicit FingerprintDatabase(std::vector<Scan> entries);

  const std::vector<Scan>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::int64_t first_t() const { return entries_.empty() ? 0 : entries_.front().t; }
  std::int64_t last_t() const { return entries_.empty() ? 0 : entries_.back().t; }

 private:
  std::vector<Scan> entries_;
};

/// Surveyed position of every legitimate AP.
class ApRegistry {
 public:
  ApRegistry() = default;
  explicit ApRegistry(std::map<ApId, GeoPoint> positions);

  const std::map<ApId, GeoPoint>& positions() const { return positions_; }
  bool contains(const ApId& id) const { return positions_.count(id) != 0; }
  const GeoPoint& at(const ApId& id) const;
  std::size_t size() const { return positions_.size(); }

 private:
  std::map<ApId, GeoPoint> positions_;
};

/// One Gaussian component of the mixture: a position with per-axis spread.
struct PositionEstimate {
  LocalPoint position;
  LocalPoint sigma{1.0, 1.0, 1.0};

  static PositionEstimate isotropic(const LocalPoint& position, double sigma) {
    return {position, {sigma, sigma, sigma}};
  }
  bool valid() const;
};

}  // namespace gmraim
