#include "gmraim/geo.hpp"

#include <algorithm>
#include <numbers>

#include "gmraim/error.hpp"

namespace gmraim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kInvalidField: return "InvalidField";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kTooFewAps: return "TooFewAps";
    case ErrorCode::kAllScoresZero: return "AllScoresZero";
    case ErrorCode::kSubsetTooSmall: return "SubsetTooSmall";
    case ErrorCode::kApNotInRegistry: return "ApNotInRegistry";
    case ErrorCode::kEmptyMixture: return "EmptyMixture";
    case ErrorCode::kAllSubsetsFailed: return "AllSubsetsFailed";
    case ErrorCode::kWindowTooLarge: return "WindowTooLarge";
    case ErrorCode::kNonMonotoneDetector: return "NonMonotoneDetector";
    case ErrorCode::kUnknownTarget: return "UnknownTarget";
    case ErrorCode::kMissingTruth: return "MissingTruth";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

bool GeoPoint::valid() const {
  return std::isfinite(latitude) && std::isfinite(longitude) && std::isfinite(height) &&
         latitude >= -90.0 && latitude <= 90.0 && longitude >= -180.0 && longitude <= 180.0;
}

LocalPoint to_local(const GeoPoint& p, const GeoPoint& origin) {
  const double meters_per_degree = kEarthRadius * kDegToRad;
  return {(p.longitude - origin.longitude) * std::cos(origin.latitude * kDegToRad) * meters_per_degree,
          (p.latitude - origin.latitude) * meters_per_degree, p.height - origin.height};
}

GeoPoint from_local(const LocalPoint& p, const GeoPoint& origin) {
  const double meters_per_degree = kEarthRadius * kDegToRad;
  return {origin.latitude + p.north / meters_per_degree,
          origin.longitude + p.east / (std::cos(origin.latitude * kDegToRad) * meters_per_degree),
          origin.height + p.up};
}

void validate_scan(const Scan& scan) {
  if (scan.rssi.empty()) {
    throw Error(ErrorCode::kInvalidField, "scan t=" + std::to_string(scan.t) + ": rssi is empty");
  }
  for (const auto& [id, dbm] : scan.rssi) {
    if (id.empty()) {
      throw Error(ErrorCode::kInvalidField, "scan t=" + std::to_string(scan.t) + ": empty apid");
    }
    if (!std::isfinite(dbm)) {
      throw Error(ErrorCode::kInvalidField,
                  "scan t=" + std::to_string(scan.t) + ": rssi[" + id + "] is not finite");
    }
  }
  if (scan.truth && !scan.truth->valid()) {
    throw Error(ErrorCode::kInvalidField, "scan t=" + std::to_string(scan.t) + ": truth out of range");
  }
}

FingerprintDatabase::FingerprintDatabase(std::vector<Scan> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    validate_scan(e);
    if (!e.truth) {
      throw Error(ErrorCode::kMissingTruth,
                  "fingerprint t=" + std::to_string(e.t) + ": truth is required");
    }
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Scan& a, const Scan& b) { return a.t < b.t; });
}

ApRegistry::ApRegistry(std::map<ApId, GeoPoint> positions) : positions_(std::move(positions)) {
  for (const auto& [id, p] : positions_) {
    if (!p.valid()) throw Error(ErrorCode::kInvalidField, "registry: position of " + id + " invalid");
  }
}

const GeoPoint& ApRegistry::at(const ApId& id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) throw Error(ErrorCode::kApNotInRegistry, "AP not in registry: " + id);
  return it->second;
}

bool PositionEstimate::valid() const {
  return position.finite() && sigma.finite() && sigma.east > 0 && sigma.north > 0 && sigma.up > 0;
}

}  // namespace gmraim
