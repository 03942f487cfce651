#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wifiseg/eval.hpp"
#include "wifiseg/ingest.hpp"

namespace wifiseg {

struct AccessPoint {
  std::string bssid;
  std::string ssid;
  Position position;
};

/// Log-distance path-loss scene used to produce labeled WiFi traces with known
/// geometry. Segments are visited round-robin over the locations, separated by
/// walking intervals, so motion segmentation recovers them in generation order.
struct SyntheticSceneConfig {
  double width = 20.0;   // m
  double height = 20.0;  // m
  std::vector<AccessPoint> aps;          // default: 4 corners + center
  double path_loss_exponent = 2.5;
  double reference_power = -40.0;        // dBm at 1 m
  double shadowing_sigma = 4.0;          // dB, per scan
  double visibility_threshold = -95.0;   // readings below become dropouts
  double dropout_probability = 0.0;      // additional random misses per reading
  std::vector<Position> locations;       // default: 4 x 3 grid
  std::size_t samples_per_segment = 20;  // scans
  std::size_t segments_per_location = 3;
  std::uint64_t seed = 42;

  Duration scan_interval = 3000;  // ms between scans
  Duration walk_duration = 20000; // moving gap between segments
  Timestamp start_time = 1'600'000'000'000;
  double accel_rate_hz = 50.0;
  double walking_sigma = 2.0;     // m/s^2 noise while moving
  double stationary_sigma = 0.02; // m/s^2 noise while stationary
  std::string device = "sim-0";

  static SyntheticSceneConfig defaults();
  void validate() const;
};

SyntheticSceneConfig scene_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticSceneConfig& cfg);

/// Mean RSSI under the log-distance model; distances below 1 m count as 1 m.
double path_loss_rssi(double reference_power, double exponent, double distance_m);

struct SyntheticScene {
  WifiDataset wifi;
  std::vector<AccelObservation> accel;
  std::vector<LabeledSegment> labels;  // segment ids in generation order
  std::vector<std::pair<Timestamp, Timestamp>> segment_spans;
};

SyntheticScene generate_synthetic_scene(const SyntheticSceneConfig& cfg,
                                        Warnings* warnings = nullptr);

}  // namespace wifiseg
