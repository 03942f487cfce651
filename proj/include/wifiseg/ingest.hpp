#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wifiseg/error.hpp"

namespace wifiseg {

using Timestamp = std::int64_t;  // milliseconds since epoch
using Duration = std::int64_t;   // milliseconds

inline constexpr int kRssiMin = -100;
inline constexpr int kRssiMax = -10;
/// RSSI assigned to an AP that was not seen in a scan.
inline constexpr int kInvisibleRssi = kRssiMin;

struct WifiObservation {
  Timestamp timestamp = 0;
  std::string device;
  std::string bssid;
  std::optional<std::string> ssid;
  int rssi = kRssiMin;

  friend bool operator==(const WifiObservation&, const WifiObservation&) = default;
};

struct AccelObservation {
  Timestamp timestamp = 0;
  std::string device;
  double magnitude = 0.0;  // m/s^2

  friend bool operator==(const AccelObservation&, const AccelObservation&) = default;
};

enum class RecordFormat { Csv, Jsonl };

RecordFormat format_from_path(std::string_view path);

/// Time-ordered WiFi observations together with the set of APs they mention.
/// Construction sorts by (timestamp, device, bssid), drops exact duplicates and
/// rejects conflicting duplicates.
class WifiDataset {
 public:
  WifiDataset() = default;
  explicit WifiDataset(std::vector<WifiObservation> observations);

  const std::vector<WifiObservation>& observations() const { return observations_; }
  const std::set<std::string>& ap_universe() const { return ap_universe_; }
  std::set<std::string> devices() const;
  bool empty() const { return observations_.empty(); }
  std::size_t size() const { return observations_.size(); }

  friend bool operator==(const WifiDataset&, const WifiDataset&) = default;

 private:
  std::vector<WifiObservation> observations_;
  std::set<std::string> ap_universe_;
};

/// Case-insensitive SSID prefix/suffix rules for hotspot-style mobile APs.
struct Blacklist {
  std::vector<std::string> prefixes;
  std::vector<std::string> suffixes;

  bool matches(std::string_view ssid) const;

  /// One rule per line, `prefix:<s>` or `suffix:<s>`; '#' starts a comment line.
  static Blacklist parse(std::istream& in);
};

WifiDataset parse_wifi_records(std::istream& in, RecordFormat format);
std::vector<AccelObservation> parse_accel_records(std::istream& in, RecordFormat format);

void write_wifi_records(std::ostream& out, const WifiDataset& ds, RecordFormat format);
void write_accel_records(std::ostream& out, const std::vector<AccelObservation>& accel,
                         RecordFormat format);

WifiDataset filter_mobile_aps(const WifiDataset& ds, const Blacklist& bl);

/// Unknown devices yield an empty dataset and a warning.
WifiDataset restrict_device(const WifiDataset& ds, std::string_view device,
                            Warnings* warnings = nullptr);

std::vector<AccelObservation> restrict_device(const std::vector<AccelObservation>& accel,
                                              std::string_view device);

/// Observations of one device whose timestamps lie within `scan_epsilon` of
/// the first observation of the group form one scan.
struct Scan {
  Timestamp timestamp;  // first timestamp of the group
  std::size_t begin;    // index range into the dataset's observations
  std::size_t end;
};

std::vector<Scan> group_scans(const WifiDataset& ds, Duration scan_epsilon);

inline constexpr Duration kDefaultScanEpsilon = 500;

/// Adds a -100 dBm pseudo-observation at the scan timestamp for every AP of the
/// universe that the scan did not report. Devices are handled independently.
WifiDataset augment_ap_invisibility(const WifiDataset& ds,
                                    Duration scan_epsilon = kDefaultScanEpsilon);

}  // namespace wifiseg
