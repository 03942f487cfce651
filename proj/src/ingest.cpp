#include "wifiseg/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <tuple>

#include <json.hpp>

#include "wifiseg/csv.hpp"

namespace wifiseg {

namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void check_rssi(long long rssi, std::size_t line_no) {
  if (rssi < kRssiMin || rssi > kRssiMax)
    throw DataError("line " + std::to_string(line_no) + ": rssi " + std::to_string(rssi) +
                    " outside [" + std::to_string(kRssiMin) + ", " +
                    std::to_string(kRssiMax) + "]");
}

std::vector<std::string> expect_header(csv::Reader& reader,
                                       const std::vector<std::vector<std::string>>& allowed) {
  auto header = reader.next();
  if (!header) return {};
  for (auto& f : header->fields) {
    while (!f.empty() && f.back() == ' ') f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  // UTF-8 byte order mark
  if (!header->fields.empty() && header->fields[0].rfind("\xEF\xBB\xBF", 0) == 0)
    header->fields[0].erase(0, 3);
  for (const auto& a : allowed)
    if (header->fields == a) return a;
  std::string expected;
  for (const auto& a : allowed) {
    if (!expected.empty()) expected += "' or '";
    expected += csv::join(a);
  }
  throw ParseError(header->line_no, "unexpected header, expected '" + expected + "'");
}

json parse_json_line(const std::string& line, std::size_t line_no) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
  }
}

template <class T>
T json_field(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    throw ParseError(line_no, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(line_no, std::string("wrong type for field '") + key + "'");
  }
}

template <class F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    f(parse_json_line(line, line_no), line_no);
  }
}

bool starts_with_ci(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && lower(s.substr(0, p.size())) == lower(p);
}

bool ends_with_ci(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && lower(s.substr(s.size() - p.size())) == lower(p);
}

}  // namespace

RecordFormat format_from_path(std::string_view path) {
  auto ends = [&](std::string_view ext) {
    return path.size() >= ext.size() && lower(path.substr(path.size() - ext.size())) == ext;
  };
  if (ends(".jsonl") || ends(".ndjson") || ends(".json")) return RecordFormat::Jsonl;
  return RecordFormat::Csv;
}

WifiDataset::WifiDataset(std::vector<WifiObservation> observations)
    : observations_(std::move(observations)) {
  auto key = [](const WifiObservation& o) {
    return std::tie(o.timestamp, o.device, o.bssid);
  };
  std::stable_sort(observations_.begin(), observations_.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
  std::vector<WifiObservation> unique;
  unique.reserve(observations_.size());
  for (auto& o : observations_) {
    if (o.rssi < kRssiMin || o.rssi > kRssiMax)
      throw DataError("rssi " + std::to_string(o.rssi) + " out of range for " + o.bssid);
    if (!unique.empty() && key(unique.back()) == key(o)) {
      if (unique.back().rssi != o.rssi)
        throw DataError("conflicting rssi for (" + std::to_string(o.timestamp) + ", " +
                        o.device + ", " + o.bssid + "): " + std::to_string(unique.back().rssi) +
                        " vs " + std::to_string(o.rssi));
      if (!unique.back().ssid && o.ssid) unique.back().ssid = o.ssid;
      continue;
    }
    unique.push_back(std::move(o));
  }
  observations_ = std::move(unique);
  for (const auto& o : observations_) ap_universe_.insert(o.bssid);
}

std::set<std::string> WifiDataset::devices() const {
  std::set<std::string> out;
  for (const auto& o : observations_) out.insert(o.device);
  return out;
}

bool Blacklist::matches(std::string_view ssid) const {
  for (const auto& p : prefixes)
    if (starts_with_ci(ssid, p)) return true;
  for (const auto& s : suffixes)
    if (ends_with_ci(ssid, s)) return true;
  return false;
}

Blacklist Blacklist::parse(std::istream& in) {
  Blacklist bl;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(line_no, "expected prefix:<s> or suffix:<s>");
    std::string kind = lower(line.substr(0, colon));
    std::string value = line.substr(colon + 1);
    if (value.empty()) throw ParseError(line_no, "empty blacklist rule");
    if (kind == "prefix")
      bl.prefixes.push_back(value);
    else if (kind == "suffix")
      bl.suffixes.push_back(value);
    else
      throw ParseError(line_no, "unknown rule kind '" + kind + "'");
  }
  return bl;
}

WifiDataset parse_wifi_records(std::istream& in, RecordFormat format) {
  std::vector<WifiObservation> obs;
  // Conflicting duplicates are reported with the line of their second occurrence.
  std::map<std::tuple<Timestamp, std::string, std::string>, std::pair<int, std::size_t>> seen;
  auto add = [&](WifiObservation o, std::size_t line_no) {
    check_rssi(o.rssi, line_no);
    auto [it, fresh] =
        seen.try_emplace({o.timestamp, o.device, o.bssid}, std::pair{o.rssi, line_no});
    if (!fresh && it->second.first != o.rssi)
      throw DataError("line " + std::to_string(line_no) + ": rssi " + std::to_string(o.rssi) +
                      " conflicts with line " + std::to_string(it->second.second) + " for (" +
                      std::to_string(o.timestamp) + ", " + o.device + ", " + o.bssid + ")");
    obs.push_back(std::move(o));
  };

  if (format == RecordFormat::Csv) {
    csv::Reader reader(in);
    if (expect_header(reader, {{"timestamp_ms", "device", "bssid", "ssid", "rssi"}}).empty())
      return {};
    while (auto row = reader.next()) {
      const auto& f = row->fields;
      if (f.size() != 5)
        throw ParseError(row->line_no, "expected 5 fields, got " + std::to_string(f.size()));
      if (f[1].empty() || f[2].empty()) throw ParseError(row->line_no, "empty device or bssid");
      WifiObservation o;
      o.timestamp = csv::parse_int(f[0], row->line_no, "timestamp_ms");
      o.device = f[1];
      o.bssid = f[2];
      if (!f[3].empty()) o.ssid = f[3];
      long long rssi = csv::parse_int(f[4], row->line_no, "rssi");
      check_rssi(rssi, row->line_no);
      o.rssi = static_cast<int>(rssi);
      add(std::move(o), row->line_no);
    }
  } else {
    for_each_json_line(in, [&](const json& j, std::size_t line_no) {
      WifiObservation o;
      o.timestamp = json_field<Timestamp>(j, "timestamp_ms", line_no);
      o.device = json_field<std::string>(j, "device", line_no);
      o.bssid = json_field<std::string>(j, "bssid", line_no);
      if (auto it = j.find("ssid"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError(line_no, "wrong type for field 'ssid'");
        if (!it->get<std::string>().empty()) o.ssid = it->get<std::string>();
      }
      auto rssi = json_field<long long>(j, "rssi", line_no);
      check_rssi(rssi, line_no);
      o.rssi = static_cast<int>(rssi);
      if (o.device.empty() || o.bssid.empty()) throw ParseError(line_no, "empty device or bssid");
      add(std::move(o), line_no);
    });
  }
  return WifiDataset(std::move(obs));
}

std::vector<AccelObservation> parse_accel_records(std::istream& in, RecordFormat format) {
  std::vector<AccelObservation> out;
  auto from_components = [](double ax, double ay, double az) {
    return std::sqrt(ax * ax + ay * ay + az * az);
  };
  auto check_magnitude = [](double m, std::size_t line_no) {
    if (m < 0.0 || !std::isfinite(m))
      throw DataError("line " + std::to_string(line_no) + ": negative or non-finite magnitude");
  };

  if (format == RecordFormat::Csv) {
    csv::Reader reader(in);
    auto header = expect_header(reader, {{"timestamp_ms", "device", "ax", "ay", "az"},
                                         {"timestamp_ms", "device", "magnitude"}});
    if (header.empty()) return out;
    const bool components = header.size() == 5;
    while (auto row = reader.next()) {
      const auto& f = row->fields;
      if (f.size() != header.size())
        throw ParseError(row->line_no, "expected " + std::to_string(header.size()) +
                                           " fields, got " + std::to_string(f.size()));
      if (f[1].empty()) throw ParseError(row->line_no, "empty device");
      AccelObservation a;
      a.timestamp = csv::parse_int(f[0], row->line_no, "timestamp_ms");
      a.device = f[1];
      if (components) {
        a.magnitude = from_components(csv::parse_double(f[2], row->line_no, "ax"),
                                      csv::parse_double(f[3], row->line_no, "ay"),
                                      csv::parse_double(f[4], row->line_no, "az"));
      } else {
        a.magnitude = csv::parse_double(f[2], row->line_no, "magnitude");
      }
      check_magnitude(a.magnitude, row->line_no);
      out.push_back(std::move(a));
    }
  } else {
    for_each_json_line(in, [&](const json& j, std::size_t line_no) {
      AccelObservation a;
      a.timestamp = json_field<Timestamp>(j, "timestamp_ms", line_no);
      a.device = json_field<std::string>(j, "device", line_no);
      if (j.contains("magnitude")) {
        a.magnitude = json_field<double>(j, "magnitude", line_no);
      } else {
        a.magnitude = from_components(json_field<double>(j, "ax", line_no),
                                      json_field<double>(j, "ay", line_no),
                                      json_field<double>(j, "az", line_no));
      }
      check_magnitude(a.magnitude, line_no);
      out.push_back(std::move(a));
    });
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.timestamp, a.device) < std::tie(b.timestamp, b.device);
  });
  return out;
}

void write_wifi_records(std::ostream& out, const WifiDataset& ds, RecordFormat format) {
  if (format == RecordFormat::Csv) {
    out << "timestamp_ms,device,bssid,ssid,rssi\n";
    for (const auto& o : ds.observations())
      out << o.timestamp << ',' << csv::escape(o.device) << ',' << csv::escape(o.bssid) << ','
          << csv::escape(o.ssid.value_or("")) << ',' << o.rssi << '\n';
  } else {
    for (const auto& o : ds.observations()) {
      json j = {{"timestamp_ms", o.timestamp}, {"device", o.device}, {"bssid", o.bssid}};
      j["ssid"] = o.ssid ? json(*o.ssid) : json(nullptr);
      j["rssi"] = o.rssi;
      out << j.dump() << '\n';
    }
  }
}

void write_accel_records(std::ostream& out, const std::vector<AccelObservation>& accel,
                         RecordFormat format) {
  if (format == RecordFormat::Csv) {
    out << "timestamp_ms,device,magnitude\n";
    for (const auto& a : accel)
      out << a.timestamp << ',' << csv::escape(a.device) << ',' << csv::format_double(a.magnitude)
          << '\n';
  } else {
    for (const auto& a : accel)
      out << json{{"timestamp_ms", a.timestamp}, {"device", a.device}, {"magnitude", a.magnitude}}
                 .dump()
          << '\n';
  }
}

WifiDataset filter_mobile_aps(const WifiDataset& ds, const Blacklist& bl) {
  std::vector<WifiObservation> kept;
  kept.reserve(ds.size());
  for (const auto& o : ds.observations())
    if (!o.ssid || !bl.matches(*o.ssid)) kept.push_back(o);
  return WifiDataset(std::move(kept));
}

WifiDataset restrict_device(const WifiDataset& ds, std::string_view device, Warnings* warnings) {
  std::vector<WifiObservation> kept;
  for (const auto& o : ds.observations())
    if (o.device == device) kept.push_back(o);
  if (kept.empty()) warn(warnings, "no WiFi observations for device '" + std::string(device) + "'");
  return WifiDataset(std::move(kept));
}

std::vector<AccelObservation> restrict_device(const std::vector<AccelObservation>& accel,
                                              std::string_view device) {
  std::vector<AccelObservation> kept;
  for (const auto& a : accel)
    if (a.device == device) kept.push_back(a);
  return kept;
}

std::vector<Scan> group_scans(const WifiDataset& ds, Duration scan_epsilon) {
  if (scan_epsilon < 0) throw UsageError("scan_epsilon must be non-negative");
  if (ds.devices().size() > 1) throw UsageError("group_scans expects a single-device dataset");
  std::vector<Scan> scans;
  const auto& obs = ds.observations();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (scans.empty() || obs[i].timestamp - scans.back().timestamp > scan_epsilon)
      scans.push_back({obs[i].timestamp, i, i});
    scans.back().end = i + 1;
  }
  return scans;
}

WifiDataset augment_ap_invisibility(const WifiDataset& ds, Duration scan_epsilon) {
  const auto& universe = ds.ap_universe();
  std::vector<WifiObservation> out(ds.observations());
  for (const auto& device : ds.devices()) {
    WifiDataset single = restrict_device(ds, device);
    const auto& obs = single.observations();
    for (const auto& scan : group_scans(single, scan_epsilon)) {
      std::set<std::string_view> seen;
      for (std::size_t i = scan.begin; i < scan.end; ++i) seen.insert(obs[i].bssid);
      for (const auto& b : universe) {
        if (seen.count(b)) continue;
        out.push_back({scan.timestamp, device, b, std::nullopt, kInvisibleRssi});
      }
    }
  }
  return WifiDataset(std::move(out));
}

}  // namespace wifiseg
