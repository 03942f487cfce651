#include "wifiseg/scene.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

namespace wifiseg {

using nlohmann::json;

SyntheticSceneConfig SyntheticSceneConfig::defaults() {
  SyntheticSceneConfig cfg;
  const double w = cfg.width, h = cfg.height;
  cfg.aps = {
      {"02:00:00:00:00:01", "office", {0.0, 0.0}},
      {"02:00:00:00:00:02", "office", {w, 0.0}},
      {"02:00:00:00:00:03", "office", {0.0, h}},
      {"02:00:00:00:00:04", "office", {w, h}},
      {"02:00:00:00:00:05", "office", {w / 2.0, h / 2.0}},
  };
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i)
      cfg.locations.push_back({(i + 0.5) * w / 4.0, (j + 0.5) * h / 3.0});
  return cfg;
}

void SyntheticSceneConfig::validate() const {
  if (!(width > 0.0) || !(height > 0.0)) throw UsageError("scene area must be positive");
  if (aps.empty()) throw UsageError("scene needs at least one access point");
  if (locations.empty()) throw UsageError("scene needs at least one location");
  if (samples_per_segment == 0 || segments_per_location == 0)
    throw UsageError("scene needs at least one segment with one scan");
  if (!(shadowing_sigma >= 0.0) || !(walking_sigma >= 0.0) || !(stationary_sigma >= 0.0))
    throw UsageError("noise levels must be non-negative");
  if (!(dropout_probability >= 0.0 && dropout_probability < 1.0))
    throw UsageError("dropout probability must lie in [0, 1)");
  if (scan_interval <= static_cast<Duration>(aps.size()) * 10 || walk_duration <= 0)
    throw UsageError("scan interval too short for the number of access points");
  if (!(accel_rate_hz > 0.0)) throw UsageError("accelerometer rate must be positive");
}

double path_loss_rssi(double reference_power, double exponent, double distance_m) {
  return reference_power - 10.0 * exponent * std::log10(std::max(distance_m, 1.0));
}

namespace {

Position position_from_json(const json& j) {
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  return {j.at("x").get<double>(), j.at("y").get<double>()};
}

}  // namespace

SyntheticSceneConfig scene_config_from_json(const json& j) {
  SyntheticSceneConfig cfg = SyntheticSceneConfig::defaults();
  static const std::set<std::string> known = {
      "width", "height", "path_loss_exponent", "reference_power", "shadowing_sigma",
      "visibility_threshold", "dropout_probability", "samples_per_segment",
      "segments_per_location", "seed", "scan_interval", "walk_duration", "start_time",
      "accel_rate_hz", "walking_sigma", "stationary_sigma", "device", "aps", "locations"};
  if (!j.is_object()) throw DataError("scene config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw UsageError("unknown scene config key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("width", cfg.width);
    get("height", cfg.height);
    get("path_loss_exponent", cfg.path_loss_exponent);
    get("reference_power", cfg.reference_power);
    get("shadowing_sigma", cfg.shadowing_sigma);
    get("visibility_threshold", cfg.visibility_threshold);
    get("dropout_probability", cfg.dropout_probability);
    get("samples_per_segment", cfg.samples_per_segment);
    get("segments_per_location", cfg.segments_per_location);
    get("seed", cfg.seed);
    get("scan_interval", cfg.scan_interval);
    get("walk_duration", cfg.walk_duration);
    get("start_time", cfg.start_time);
    get("accel_rate_hz", cfg.accel_rate_hz);
    get("walking_sigma", cfg.walking_sigma);
    get("stationary_sigma", cfg.stationary_sigma);
    get("device", cfg.device);
    if (j.contains("aps")) {
      cfg.aps.clear();
      for (const auto& a : j.at("aps"))
        cfg.aps.push_back({a.at("bssid").get<std::string>(), a.value("ssid", std::string{}),
                           position_from_json(a.contains("position") ? a.at("position") : a)});
    }
    if (j.contains("locations")) {
      cfg.locations.clear();
      for (const auto& l : j.at("locations")) cfg.locations.push_back(position_from_json(l));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid scene config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const SyntheticSceneConfig& cfg) {
  json aps = json::array();
  for (const auto& a : cfg.aps)
    aps.push_back({{"bssid", a.bssid}, {"ssid", a.ssid}, {"x", a.position.x}, {"y", a.position.y}});
  json locations = json::array();
  for (const auto& l : cfg.locations) locations.push_back({{"x", l.x}, {"y", l.y}});
  return {{"width", cfg.width},
          {"height", cfg.height},
          {"aps", aps},
          {"path_loss_exponent", cfg.path_loss_exponent},
          {"reference_power", cfg.reference_power},
          {"shadowing_sigma", cfg.shadowing_sigma},
          {"visibility_threshold", cfg.visibility_threshold},
          {"dropout_probability", cfg.dropout_probability},
          {"locations", locations},
          {"samples_per_segment", cfg.samples_per_segment},
          {"segments_per_location", cfg.segments_per_location},
          {"seed", cfg.seed},
          {"scan_interval", cfg.scan_interval},
          {"walk_duration", cfg.walk_duration},
          {"start_time", cfg.start_time},
          {"accel_rate_hz", cfg.accel_rate_hz},
          {"walking_sigma", cfg.walking_sigma},
          {"stationary_sigma", cfg.stationary_sigma},
          {"device", cfg.device}};
}

SyntheticScene generate_synthetic_scene(const SyntheticSceneConfig& cfg, Warnings* warnings) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  SyntheticScene scene;
  std::vector<WifiObservation> wifi;
  constexpr double kGravity = 9.81;
  const double accel_period_ms = 1000.0 / cfg.accel_rate_hz;

  // Mean RSSI per (location, AP).
  std::vector<std::vector<double>> mean(cfg.locations.size());
  for (std::size_t l = 0; l < cfg.locations.size(); ++l) {
    bool any_visible = false;
    for (const auto& ap : cfg.aps) {
      const double d = std::hypot(cfg.locations[l].x - ap.position.x,
                                  cfg.locations[l].y - ap.position.y);
      mean[l].push_back(path_loss_rssi(cfg.reference_power, cfg.path_loss_exponent, d));
      any_visible = any_visible || mean[l].back() >= cfg.visibility_threshold;
    }
    if (!any_visible)
      warn(warnings, "location " + std::to_string(l) + " sees no access point above the "
                     "visibility threshold");
  }

  auto emit_accel = [&](Timestamp from, Timestamp to, double sigma) {
    // Samples on a global clock so concatenated blocks stay evenly spaced.
    const double first = std::ceil(static_cast<double>(from - cfg.start_time) / accel_period_ms);
    for (double k = first;; k += 1.0) {
      const auto t = cfg.start_time + static_cast<Timestamp>(std::llround(k * accel_period_ms));
      if (t >= to) break;
      if (t < from) continue;
      scene.accel.push_back({t, cfg.device, std::abs(kGravity + sigma * unit(rng))});
    }
  };

  char label[32];
  Timestamp t = cfg.start_time;
  const Duration segment_len = static_cast<Duration>(cfg.samples_per_segment) * cfg.scan_interval;
  for (std::size_t round = 0; round < cfg.segments_per_location; ++round) {
    for (std::size_t l = 0; l < cfg.locations.size(); ++l) {
      if (t != cfg.start_time) {
        emit_accel(t, t + cfg.walk_duration, cfg.walking_sigma);
        t += cfg.walk_duration;
      }
      const Timestamp seg_start = t;
      for (std::size_t s = 0; s < cfg.samples_per_segment; ++s) {
        const Timestamp scan_t =
            seg_start + cfg.scan_interval / 2 + static_cast<Duration>(s) * cfg.scan_interval;
        for (std::size_t a = 0; a < cfg.aps.size(); ++a) {
          const double reading = mean[l][a] + cfg.shadowing_sigma * unit(rng);
          const bool dropped = uniform(rng) < cfg.dropout_probability;
          if (dropped || reading < cfg.visibility_threshold) continue;
          const int rssi = std::clamp(static_cast<int>(std::lround(reading)), kRssiMin, kRssiMax);
          wifi.push_back({scan_t + static_cast<Duration>(a) * 10, cfg.device, cfg.aps[a].bssid,
                          cfg.aps[a].ssid.empty() ? std::nullopt
                                                  : std::optional<std::string>(cfg.aps[a].ssid),
                          rssi});
        }
      }
      emit_accel(seg_start, seg_start + segment_len, cfg.stationary_sigma);
      t = seg_start + segment_len;
      std::snprintf(label, sizeof label, "loc-%02zu", l);
      scene.labels.push_back({scene.labels.size(), label, cfg.locations[l]});
      scene.segment_spans.emplace_back(seg_start, t);
    }
  }
  scene.wifi = WifiDataset(std::move(wifi));
  return scene;
}

}  // namespace wifiseg
