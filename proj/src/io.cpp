#include "gmraim/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gmraim/attack.hpp"
#include "gmraim/error.hpp"

namespace gmraim {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

// Parses one JSON document, rejecting objects that repeat a key.
json parse_strict(const std::string& line, std::size_t line_no) {
  std::vector<std::set<std::string>> keys;
  std::string duplicate;
  json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        keys.emplace_back();
        break;
      case json::parse_event_t::object_end:
        if (!keys.empty()) keys.pop_back();
        break;
      case json::parse_event_t::key:
        if (!keys.empty() && !keys.back().insert(parsed.get<std::string>()).second && duplicate.empty()) {
          duplicate = parsed.get<std::string>();
        }
        break;
      default:
        break;
    }
    return true;
  };
  json doc;
  try {
    doc = json::parse(line, cb);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!duplicate.empty()) {
    throw Error(ErrorCode::kInvalidField,
                "line " + std::to_string(line_no) + ": duplicate apid '" + duplicate + "'");
  }
  return doc;
}

GeoPoint geo_from_json(const json& j, std::size_t line_no, const char* field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
    throw Error(ErrorCode::kInvalidField,
                "line " + std::to_string(line_no) + ": " + field + " must be [lat, lon, h]");
  }
  GeoPoint p{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!p.valid()) {
    throw Error(ErrorCode::kInvalidField,
                "line " + std::to_string(line_no) + ": " + field + " out of range");
  }
  return p;
}

Scan scan_from_json(const json& j, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  if (!j.is_object()) throw Error(ErrorCode::kParse, where + "expected a JSON object");
  Scan scan;
  auto t = j.find("t");
  if (t == j.end() || !t->is_number_integer()) {
    throw Error(ErrorCode::kInvalidField, where + "field 't' must be an integer");
  }
  scan.t = t->get<std::int64_t>();
  auto rssi = j.find("rssi");
  if (rssi == j.end() || !rssi->is_object()) {
    throw Error(ErrorCode::kInvalidField, where + "field 'rssi' must be an object");
  }
  for (const auto& [id, value] : rssi->items()) {
    if (!value.is_number()) {
      throw Error(ErrorCode::kInvalidField, where + "rssi['" + id + "'] must be a number");
    }
    scan.rssi.emplace(id, value.get<double>());
  }
  if (auto truth = j.find("truth"); truth != j.end() && !truth->is_null()) {
    scan.truth = geo_from_json(*truth, line_no, "truth");
  }
  try {
    validate_scan(scan);
  } catch (const Error& e) {
    throw Error(e.code(), where + e.what());
  }
  return scan;
}

json scan_to_json(const Scan& scan) {
  json j;
  j["t"] = scan.t;
  j["rssi"] = json::object();
  for (const auto& [id, v] : scan.rssi) j["rssi"][id] = v;
  if (scan.truth) j["truth"] = {scan.truth->latitude, scan.truth->longitude, scan.truth->height};
  return j;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(line, line_no);
  }
}

}  // namespace

Trace read_trace(std::istream& in) {
  Trace trace;
  for_each_line(in, [&](const std::string& line, std::size_t no) {
    trace.push_back(scan_from_json(parse_strict(line, no), no));
  });
  std::stable_sort(trace.begin(), trace.end(), [](const Scan& a, const Scan& b) { return a.t < b.t; });
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_trace(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& scan : trace) out << scan_to_json(scan).dump() << '\n';
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  write_file(path, out.str());
}

FingerprintDatabase read_fingerprints(std::istream& in) {
  std::vector<Scan> entries;
  for_each_line(in, [&](const std::string& line, std::size_t no) {
    Scan scan = scan_from_json(parse_strict(line, no), no);
    if (!scan.truth) {
      throw Error(ErrorCode::kMissingTruth, "line " + std::to_string(no) + ": fingerprint requires 'truth'");
    }
    entries.push_back(std::move(scan));
  });
  return FingerprintDatabase(std::move(entries));
}

FingerprintDatabase load_fingerprints(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_fingerprints(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_fingerprints(const std::filesystem::path& path, const FingerprintDatabase& db) {
  save_trace(path, db.entries());
}

ApRegistry read_registry(std::istream& in) {
  std::map<ApId, GeoPoint> positions;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "apid,lat,lon,height") {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected header apid,lat,lon,height");
      }
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 4) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 4 columns");
    }
    double values[3];
    for (int i = 0; i < 3; ++i) {
      const auto& s = cells[i + 1];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), values[i]);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
      }
    }
    GeoPoint p{values[0], values[1], values[2]};
    if (cells[0].empty()) throw Error(ErrorCode::kInvalidField, "line " + std::to_string(line_no) + ": empty apid");
    if (!p.valid()) {
      throw Error(ErrorCode::kInvalidField, "line " + std::to_string(line_no) + ": position of " + cells[0] + " invalid");
    }
    if (!positions.emplace(cells[0], p).second) {
      throw Error(ErrorCode::kInvalidField, "line " + std::to_string(line_no) + ": duplicate apid '" + cells[0] + "'");
    }
  }
  return ApRegistry(std::move(positions));
}

ApRegistry load_registry(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_registry(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_registry(std::ostream& out, const ApRegistry& registry) {
  out << "apid,lat,lon,height\n";
  for (const auto& [id, p] : registry.positions()) {
    out << id << ',' << format_double(p.latitude) << ',' << format_double(p.longitude) << ','
        << format_double(p.height) << '\n';
  }
}

void save_registry(const std::filesystem::path& path, const ApRegistry& registry) {
  std::ostringstream out;
  write_registry(out, registry);
  write_file(path, out.str());
}

GeoPoint load_origin(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  json meta = parse_strict(line, 1);
  if (!meta.is_object() || !meta.contains("origin")) {
    throw Error(ErrorCode::kInvalidField, path.string() + ":1: missing 'origin'");
  }
  return geo_from_json(meta["origin"], 1, "origin");
}

std::vector<AttackLabel> load_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<AttackLabel> labels;
  for_each_line(in, [&](const std::string& line, std::size_t no) {
    json j = parse_strict(line, no);
    AttackLabel label;
    try {
      label.t = j.at("t").get<std::int64_t>();
      label.active = j.at("active").get<bool>();
      for (const auto& id : j.at("rogue")) label.rogue_aps.insert(id.get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidField, path.string() + ": line " + std::to_string(no) + ": " + e.what());
    }
    if (label.active == label.rogue_aps.empty()) {
      throw Error(ErrorCode::kInvalidField,
                  path.string() + ": line " + std::to_string(no) + ": rogue must be non-empty iff active");
    }
    labels.push_back(std::move(label));
  });
  return labels;
}

void save_labels(const std::filesystem::path& path, const std::vector<AttackLabel>& labels) {
  std::ostringstream out;
  for (const auto& label : labels) {
    json j;
    j["t"] = label.t;
    j["active"] = label.active;
    j["rogue"] = json::array();
    for (const auto& id : label.rogue_aps) j["rogue"].push_back(id);
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

}  // namespace gmraim
