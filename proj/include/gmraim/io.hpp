#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmraim/geo.hpp"

namespace gmraim {

struct AttackLabel;

// JSON-lines scans: {"t": int, "rssi": {"apid": dBm, ...}, "truth": [lat, lon, h]}
Trace read_trace(std::istream& in);
Trace load_trace(const std::filesystem::path& path);
void write_trace(std::ostream& out, const Trace& trace);
void save_trace(const std::filesystem::path& path, const Trace& trace);

FingerprintDatabase read_fingerprints(std::istream& in);
FingerprintDatabase load_fingerprints(const std::filesystem::path& path);
void save_fingerprints(const std::filesystem::path& path, const FingerprintDatabase& db);

// CSV with header `apid,lat,lon,height`.
ApRegistry read_registry(std::istream& in);
ApRegistry load_registry(const std::filesystem::path& path);
void write_registry(std::ostream& out, const ApRegistry& registry);
void save_registry(const std::filesystem::path& path, const ApRegistry& registry);

/// Reads `origin` from the first line of a scene metadata file.
GeoPoint load_origin(const std::filesystem::path& path);

std::vector<AttackLabel> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const std::vector<AttackLabel>& labels);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace gmraim
