#include "wifiseg/motionseg.hpp"

#include <algorithm>
#include <numeric>

#include <omp.h>

namespace wifiseg {

void set_worker_count(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

void WindowConfig::validate() const {
  if (hop <= 0 || hop > window_len)
    throw UsageError("window config requires 0 < hop <= window_len");
  if (!(threshold >= 0.0)) throw UsageError("window threshold must be non-negative");
}

double window_statistic(std::span<const double> samples, WindowStatistic statistic) {
  if (samples.empty()) throw UsageError("window statistic of an empty window");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  switch (statistic) {
    case WindowStatistic::Energy:
      return ss / n;
    case WindowStatistic::Variance:
      return samples.size() < 2 ? 0.0 : ss / (n - 1.0);
  }
  return 0.0;
}

WindowLabels label_windows(std::span<const AccelObservation> accel, const WindowConfig& cfg,
                           Execution exec) {
  cfg.validate();
  WindowLabels out;
  if (accel.empty()) return out;
  out.origin = accel.front().timestamp;
  const Timestamp last = accel.back().timestamp;
  const auto count = static_cast<std::size_t>((last - out.origin) / cfg.hop + 1);

  std::vector<double> magnitudes(accel.size());
  std::vector<Timestamp> times(accel.size());
  for (std::size_t i = 0; i < accel.size(); ++i) {
    magnitudes[i] = accel[i].magnitude;
    times[i] = accel[i].timestamp;
  }

  // -1: too sparse, 0: stationary, 1: moving
  std::vector<signed char> raw(count);
  auto classify = [&](std::size_t k) {
    const Timestamp lo = out.origin + static_cast<Timestamp>(k) * cfg.hop;
    const Timestamp hi = lo + cfg.window_len;
    auto b = std::lower_bound(times.begin(), times.end(), lo) - times.begin();
    auto e = std::lower_bound(times.begin(), times.end(), hi) - times.begin();
    if (static_cast<std::size_t>(e - b) < kMinWindowSamples) {
      raw[k] = -1;
      return;
    }
    std::span<const double> window(magnitudes.data() + b, static_cast<std::size_t>(e - b));
    raw[k] = window_statistic(window, cfg.statistic) > cfg.threshold ? 1 : 0;
  };

  if (exec == Execution::Parallel) {
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) classify(static_cast<std::size_t>(k));
  } else {
    for (std::size_t k = 0; k < count; ++k) classify(k);
  }

  out.moving.resize(count);
  out.carried.resize(count);
  char previous = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (raw[k] < 0) {
      out.moving[k] = previous;
      out.carried[k] = 1;
    } else {
      out.moving[k] = static_cast<char>(raw[k]);
    }
    previous = out.moving[k];
  }
  return out;
}

MotionSegmentation segment_motion(std::span<const AccelObservation> accel,
                                  const WindowConfig& cfg,
                                  std::optional<std::pair<Timestamp, Timestamp>> wifi_span,
                                  Execution exec) {
  cfg.validate();
  MotionSegmentation seg;
  if (accel.empty()) {
    if (!cfg.assume_stationary_when_no_accel || !wifi_span)
      throw DataError("no acceleration data; set assume_stationary_when_no_accel to treat the "
                      "WiFi span as one stationary segment");
    seg.boundaries = {wifi_span->first, wifi_span->second + 1};
    return seg;
  }
  if (!std::is_sorted(accel.begin(), accel.end(),
                      [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }))
    throw UsageError("acceleration series must be sorted by timestamp");

  const WindowLabels windows = label_windows(accel, cfg, exec);
  const std::size_t count = windows.moving.size();
  seg.carried_windows =
      static_cast<std::size_t>(std::count(windows.carried.begin(), windows.carried.end(), 1));

  // A hop-wide cell is moving only if every window overlapping it is moving;
  // this keeps quiet cells next to a change point from inheriting the motion
  // of the windows that straddle it.
  const auto overlap = static_cast<std::size_t>((cfg.window_len + cfg.hop - 1) / cfg.hop);
  std::vector<char> cell_moving(count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t first = c + 1 >= overlap ? c + 1 - overlap : 0;
    bool all = true;
    for (std::size_t k = first; k <= c; ++k) all = all && windows.moving[k];
    cell_moving[c] = all;
  }

  const Timestamp end = accel.back().timestamp + 1;
  seg.boundaries.push_back(windows.origin);
  if (cell_moving[0]) seg.boundaries.push_back(windows.origin);
  for (std::size_t c = 1; c < count; ++c)
    if (cell_moving[c] != cell_moving[c - 1])
      seg.boundaries.push_back(windows.origin + static_cast<Timestamp>(c) * cfg.hop);
  seg.boundaries.push_back(end);
  return seg;
}

std::vector<WifiSegment> extract_stationary_segments(const WifiDataset& ds,
                                                     const MotionSegmentation& seg,
                                                     Duration min_duration) {
  if (ds.devices().size() > 1)
    throw UsageError("extract_stationary_segments expects a single-device dataset");
  const auto& obs = ds.observations();
  auto at_or_after = [&](Timestamp t) {
    return std::lower_bound(obs.begin(), obs.end(), t,
                            [](const WifiObservation& o, Timestamp v) { return o.timestamp < v; });
  };
  std::vector<WifiSegment> out;
  for (std::size_t i = 0; i + 1 < seg.boundaries.size(); i += 2) {
    const Timestamp start = seg.boundaries[i];
    const Timestamp end = seg.boundaries[i + 1];
    if (end - start < min_duration) continue;
    auto b = at_or_after(start);
    auto e = at_or_after(end);
    if (b == e) continue;
    WifiSegment s;
    s.segment_id = out.size();
    s.device = b->device;
    s.start = start;
    s.end = end;
    s.observations.assign(b, e);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace wifiseg
