#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wifiseg/execution.hpp"
#include "wifiseg/ingest.hpp"

namespace wifiseg {

enum class WindowStatistic { Energy, Variance };

struct WindowConfig {
  Duration window_len = 2000;
  Duration hop = 1000;
  WindowStatistic statistic = WindowStatistic::Variance;
  double threshold = 0.5;  // (m/s^2)^2
  bool assume_stationary_when_no_accel = false;

  void validate() const;
};

/// Alternating partition of time. Interval [boundaries[i], boundaries[i+1]) is
/// stationary for even i and moving for odd i. Only the first interval may be
/// empty (series that start in motion).
struct MotionSegmentation {
  std::vector<Timestamp> boundaries;
  /// Windows with too few samples took the label of their predecessor.
  std::size_t carried_windows = 0;

  std::size_t interval_count() const {
    return boundaries.empty() ? 0 : boundaries.size() - 1;
  }
  static bool is_stationary(std::size_t interval) { return interval % 2 == 0; }
};

struct WifiSegment {
  std::size_t segment_id = 0;
  std::string device;
  Timestamp start = 0;
  Timestamp end = 0;  // exclusive
  std::vector<WifiObservation> observations;
};

inline constexpr Duration kDefaultMinSegmentDuration = 10000;
inline constexpr std::size_t kMinWindowSamples = 3;

/// Variance is the unbiased sample variance; energy is the mean squared
/// deviation from the window mean (gravity offset removed).
double window_statistic(std::span<const double> samples, WindowStatistic statistic);

/// Per-window moving/stationary labels; window k covers
/// [t_first + k*hop, t_first + k*hop + window_len). Sparse windows are carried.
struct WindowLabels {
  Timestamp origin = 0;
  std::vector<char> moving;
  std::vector<char> carried;
};

WindowLabels label_windows(std::span<const AccelObservation> accel, const WindowConfig& cfg,
                           Execution exec = Execution::Parallel);

/// `wifi_span` supplies (first, last) WiFi timestamps for the no-accel fallback.
MotionSegmentation segment_motion(std::span<const AccelObservation> accel,
                                  const WindowConfig& cfg,
                                  std::optional<std::pair<Timestamp, Timestamp>> wifi_span = {},
                                  Execution exec = Execution::Parallel);

std::vector<WifiSegment> extract_stationary_segments(const WifiDataset& ds,
                                                     const MotionSegmentation& seg,
                                                     Duration min_duration = kDefaultMinSegmentDuration);

}  // namespace wifiseg
