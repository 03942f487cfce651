#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wifiseg/distance.hpp"
#include "wifiseg/embed.hpp"
#include "wifiseg/eval.hpp"
#include "wifiseg/ingest.hpp"
#include "wifiseg/likelihood.hpp"
#include "wifiseg/motionseg.hpp"
#include "wifiseg/scene.hpp"

namespace wifiseg {

/// How stationary segments become fingerprints for evaluation.
enum class Grouping {
  Segment,  // one fingerprint per stationary segment
  RoomDay,  // segments sharing label and calendar day (UTC) are pooled
};

struct PipelineConfig {
  // Inputs. Without a WiFi path the pipeline runs on a generated scene.
  std::filesystem::path wifi;
  std::filesystem::path accel;
  std::filesystem::path blacklist;
  std::filesystem::path labels;
  std::filesystem::path scene;  // optional scene JSON for synthetic mode
  std::string device;           // empty: the input must contain exactly one device

  WindowConfig window;
  Duration min_duration = kDefaultMinSegmentDuration;
  Duration scan_epsilon = kDefaultScanEpsilon;

  Estimator estimator = Estimator::Kde;
  double bandwidth = 2.0;
  double laplace_epsilon = kDefaultLaplaceEpsilon;  // used only where a measure needs it
  double sigma_min2 = 1.0;
  bool invisibility = true;

  std::vector<Measure> measures = {Measure::EarthMovers};
  std::vector<Norm> norms = {Norm::L2};
  MeasureOptions measure_options;
  Grouping grouping = Grouping::Segment;
  std::size_t mds_dim = 2;

  std::vector<Estimator> sweep_estimators = {Estimator::Pmf, Estimator::Normal, Estimator::Kde};
  std::vector<Measure> sweep_measures{kAggregatableMeasures.begin(), kAggregatableMeasures.end()};
  std::vector<Norm> sweep_norms = {Norm::L1, Norm::L2};
  std::vector<bool> sweep_invisibility = {false, true};

  std::uint64_t seed = 42;
  std::filesystem::path output_dir;
  int jobs = 0;

  /// Options handed to the estimator for a given (estimator, measure) pair;
  /// PMFs are smoothed only for measures that need strictly positive mass.
  EstimatorOptions estimator_options(Estimator e, Measure m, bool invisibility) const;
  /// Throws UsageError on out-of-range parameters or non-matrix measures.
  void validate() const;
};

/// Keys mirror the struct fields; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::json to_json(const PipelineConfig& cfg);
/// Hash over everything except output_dir and jobs.
std::string config_hash(const PipelineConfig& cfg);

/// Filtered single-device inputs plus optional ground truth.
struct PreparedInputs {
  std::string device;
  WifiDataset wifi;       // blacklist-filtered, restricted to `device`
  WifiDataset augmented;  // wifi plus invisibility pseudo-observations
  std::vector<AccelObservation> accel;
  std::vector<LabeledSegment> labels;  // from the labels file
  bool synthetic = false;
  std::vector<LabeledSegment> truth_labels;  // synthetic mode: one per generated segment
  std::vector<std::pair<Timestamp, Timestamp>> truth_spans;
  Warnings warnings;
};

PreparedInputs prepare_inputs(const PipelineConfig& cfg);

struct SegmentationResult {
  MotionSegmentation motion;
  std::vector<WifiSegment> segments;  // raw observations (no pseudo-observations)
};

SegmentationResult run_segmentation(const PreparedInputs& in, const PipelineConfig& cfg);

/// Ground truth for extracted segments: the labels file, or in synthetic mode
/// the generated segment whose span contains the segment midpoint.
std::vector<LabeledSegment> resolve_labels(const PreparedInputs& in,
                                           std::span<const WifiSegment> segs);

/// Re-cuts stationary intervals from the dataset chosen by the invisibility flag.
std::vector<WifiSegment> segments_for_fingerprinting(const PreparedInputs& in,
                                                     std::span<const WifiSegment> segs,
                                                     bool invisibility);

/// Pools segments that share a label and UTC day; the pooled segment keeps
/// the smallest member id.
std::vector<WifiSegment> pool_room_days(std::span<const WifiSegment> segs,
                                        std::span<const LabeledSegment> labels);

std::vector<SegmentFingerprint> build_fingerprints(const PreparedInputs& in,
                                                   std::span<const WifiSegment> segs,
                                                   Estimator e, const EstimatorOptions& opts,
                                                   const PipelineConfig& cfg);

struct EvaluationResult {
  RocCurve roc;
  std::optional<CorrelationReport> correlation;
  std::string correlation_error;
  std::size_t same_pairs = 0;
  std::size_t different_pairs = 0;
};

EvaluationResult evaluate_matrix(const DistanceMatrix& m, std::span<const LabeledSegment> labels);

struct SweepRow {
  Estimator estimator;
  Measure measure;
  Norm norm;
  bool invisibility;
  double auc = 0.0;
  std::optional<double> pearson{}, spearman{}, kendall{};
};

std::string sweep_header();
std::string format_sweep_row(const SweepRow& row);

/// Runs every combination in the config's sweep lists. `on_row` is called
/// after each completed combination, in output order.
std::vector<SweepRow> run_sweep(const PipelineConfig& cfg,
                                const std::function<void(const SweepRow&)>& on_row = {},
                                const std::function<bool(const SweepRow&)>& skip = {});

// ---- Commands: write artifacts into cfg.output_dir, return manifest JSON ----

nlohmann::json command_simulate(const PipelineConfig& cfg);
nlohmann::json command_segment(const PipelineConfig& cfg);
nlohmann::json command_fingerprint(const PipelineConfig& cfg);
nlohmann::json command_distances(const PipelineConfig& cfg);
nlohmann::json command_evaluate(const PipelineConfig& cfg);
nlohmann::json command_embed(const PipelineConfig& cfg);
nlohmann::json command_sweep(const PipelineConfig& cfg);

}  // namespace wifiseg
