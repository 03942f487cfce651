#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wifiseg/distance.hpp"
#include "wifiseg/execution.hpp"

namespace wifiseg {

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

struct LabeledSegment {
  std::size_t segment_id = 0;
  std::string label;
  std::optional<Position> position;
  friend bool operator==(const LabeledSegment&, const LabeledSegment&) = default;
};

/// CSV `segment_id,label,x,y`; x and y may be empty.
std::vector<LabeledSegment> parse_labels(std::istream& in);
void write_labels(std::ostream& out, std::span<const LabeledSegment> labels);

/// Positive class is "different locations": fires 1 when d >= tau.
int classify_pair(double distance, double threshold);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

/// Points run from (0,0) at threshold +inf down through every distinct
/// observed distance to (1,1); thresholds are therefore descending.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;  // Mann-Whitney estimate, ties count 1/2
};

/// `same` are distances between segments of one location (negatives),
/// `different` between distinct locations (positives).
RocCurve roc_auc(std::span<const double> same, std::span<const double> different);

/// Trapezoidal area under the curve's points.
double curve_area(const RocCurve& curve);

struct LabeledDistances {
  std::vector<double> same;
  std::vector<double> different;
};

LabeledDistances label_pairs(const DistanceMatrix& m, std::span<const LabeledSegment> labels);

struct CorrelationReport {
  double pearson = 0.0;
  double spearman = 0.0;
  double kendall_tau = 0.0;  // tau-b
  std::size_t n_pairs = 0;
};

double pearson(std::span<const double> x, std::span<const double> y);
/// Ranks 1..n, ties receive the average rank.
std::vector<double> average_ranks(std::span<const double> v);
double spearman(std::span<const double> x, std::span<const double> y);
double kendall_tau_b(std::span<const double> x, std::span<const double> y,
                     Execution exec = Execution::Parallel);

CorrelationReport correlate(std::span<const double> computed, std::span<const double> reference,
                            Execution exec = Execution::Parallel);

/// Pairs matrix entries with Euclidean floor-plan distances over the upper
/// triangle of segments that carry a position.
CorrelationReport correlations(const DistanceMatrix& m, std::span<const LabeledSegment> labels,
                               Execution exec = Execution::Parallel);

}  // namespace wifiseg
