// Serial reference loops vs. OpenMP kernels on a synthetic scene.
#include <benchmark/benchmark.h>

#include "wifiseg/pipeline.hpp"

namespace {

using namespace wifiseg;

std::vector<SegmentFingerprint> scene_fingerprints(std::size_t segments_per_location, Estimator e) {
  PipelineConfig cfg;
  SyntheticSceneConfig scene = SyntheticSceneConfig::defaults();
  scene.segments_per_location = segments_per_location;
  const SyntheticScene s = generate_synthetic_scene(scene);
  PreparedInputs in;
  in.wifi = s.wifi;
  in.accel = s.accel;
  in.augmented = augment_ap_invisibility(in.wifi);
  const auto seg = run_segmentation(in, cfg);
  return build_fingerprints(in, seg.segments, e, cfg.estimator_options(e, Measure::EarthMovers, true),
                            cfg);
}

void BM_PairwiseMatrix(benchmark::State& state) {
  const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
  static const auto fps = scene_fingerprints(8, Estimator::Kde);
  for (auto _ : state) {
    auto m = pairwise_matrix(fps, Measure::EarthMovers, Norm::L2, {}, exec);
    benchmark::DoNotOptimize(m.values.data());
  }
  state.SetLabel(exec == Execution::Parallel ? "openmp" : "serial");
  state.counters["pairs"] = static_cast<double>(fps.size() * (fps.size() - 1) / 2);
}
BENCHMARK(BM_PairwiseMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Fingerprints(benchmark::State& state) {
  const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
  PipelineConfig cfg;
  SyntheticSceneConfig scene = SyntheticSceneConfig::defaults();
  scene.segments_per_location = 8;
  const SyntheticScene s = generate_synthetic_scene(scene);
  PreparedInputs in;
  in.wifi = s.wifi;
  in.accel = s.accel;
  in.augmented = augment_ap_invisibility(in.wifi);
  const auto seg = run_segmentation(in, cfg);
  const auto cut = segments_for_fingerprinting(in, seg.segments, true);
  const auto opts = cfg.estimator_options(Estimator::Kde, Measure::EarthMovers, true);
  for (auto _ : state) {
    auto fps = fingerprint_segments(cut, in.wifi.ap_universe(), Estimator::Kde, opts, exec);
    benchmark::DoNotOptimize(fps.data());
  }
  state.SetLabel(exec == Execution::Parallel ? "openmp" : "serial");
}
BENCHMARK(BM_Fingerprints)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_KendallTau(benchmark::State& state) {
  const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
  std::vector<double> x(4000), y(4000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>((i * 7919) % 1009);
    y[i] = static_cast<double>((i * 104729) % 997);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau_b(x, y, exec));
  state.SetLabel(exec == Execution::Parallel ? "openmp" : "serial");
}
BENCHMARK(BM_KendallTau)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MotionWindows(benchmark::State& state) {
  const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
  SyntheticSceneConfig scene = SyntheticSceneConfig::defaults();
  scene.segments_per_location = 8;
  const SyntheticScene s = generate_synthetic_scene(scene);
  for (auto _ : state) {
    auto labels = label_windows(s.accel, WindowConfig{}, exec);
    benchmark::DoNotOptimize(labels.moving.data());
  }
  state.SetLabel(exec == Execution::Parallel ? "openmp" : "serial");
}
BENCHMARK(BM_MotionWindows)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
