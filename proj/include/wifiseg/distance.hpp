#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "wifiseg/execution.hpp"
#include "wifiseg/likelihood.hpp"

namespace wifiseg {

enum class Measure {
  KlDivergence,
  SymmetrizedKl,
  JensenShannon,
  BhattacharyyaCoefficient,
  BhattacharyyaDistance,
  Hellinger,
  KolmogorovSmirnov,
  EarthMovers,
  MeanAbsDiff,
};

inline constexpr std::array<Measure, 9> kAllMeasures = {
    Measure::KlDivergence,          Measure::SymmetrizedKl,     Measure::JensenShannon,
    Measure::BhattacharyyaCoefficient, Measure::BhattacharyyaDistance, Measure::Hellinger,
    Measure::KolmogorovSmirnov,     Measure::EarthMovers,       Measure::MeanAbsDiff,
};

/// Symmetric distances that may be aggregated over APs and put into matrices.
inline constexpr std::array<Measure, 7> kAggregatableMeasures = {
    Measure::SymmetrizedKl,     Measure::JensenShannon, Measure::BhattacharyyaDistance,
    Measure::Hellinger,         Measure::KolmogorovSmirnov, Measure::EarthMovers,
    Measure::MeanAbsDiff,
};

std::string_view to_string(Measure m);
Measure measure_from_string(std::string_view s);

bool is_aggregatable(Measure m);
/// KL and Bhattacharyya families need strictly positive PMF mass.
bool requires_positive_mass(Measure m);

enum class Norm { L1 = 1, L2 = 2 };

std::string_view to_string(Norm n);
Norm norm_from_string(std::string_view s);

struct MeasureOptions {
  EvaluationGrid grid;
  double bhattacharyya_cap = 50.0;  // returned instead of +inf for non-overlapping supports
  double density_floor = 1e-300;    // KL integrand: q floor, p skip threshold

  friend bool operator==(const MeasureOptions&, const MeasureOptions&) = default;
};

struct DistanceValue {
  double value = 0.0;
  bool capped = false;  // Bhattacharyya distance hit the cap
};

/// A likelihood sampled once so many distances can reuse it. PMFs keep their
/// 91 masses with unit weights; continuous densities are sampled at the grid
/// nodes with trapezoidal weights and their CDFs in closed form.
struct DiscretizedLikelihood {
  bool discrete = false;
  bool strictly_positive = false;
  std::vector<double> density;
  std::vector<double> cdf;
  std::vector<double> weights;
  double total = 0.0;  // sum(weights * density)
  double mean = 0.0;
  double spacing = 1.0;  // distance between adjacent evaluation points
};

DiscretizedLikelihood discretize(const UnivariateLikelihood& l, const EvaluationGrid& grid);

DistanceValue univariate_distance(const DiscretizedLikelihood& p, const DiscretizedLikelihood& q,
                                  Measure m, const MeasureOptions& opts = {});
DistanceValue univariate_distance(const UnivariateLikelihood& p, const UnivariateLikelihood& q,
                                  Measure m, const MeasureOptions& opts = {});

/// (sum over APs of d^l)^(1/l); APs known to only one side are compared with
/// the invisible-AP likelihood.
DistanceValue segment_distance(const SegmentFingerprint& a, const SegmentFingerprint& b, Measure m,
                               Norm norm, const MeasureOptions& opts = {});

struct DistanceMatrix {
  std::vector<std::size_t> segment_ids;
  std::vector<double> values;  // row-major, size() x size()
  Measure measure = Measure::EarthMovers;
  Norm norm = Norm::L2;
  Estimator estimator = Estimator::Kde;
  EstimatorOptions estimator_options;
  MeasureOptions measure_options;
  std::size_t capped_entries = 0;  // upper-triangle entries with a capped AP term

  std::size_t size() const { return segment_ids.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * size() + j]; }
};

DistanceMatrix pairwise_matrix(std::span<const SegmentFingerprint> fps, Measure m, Norm norm,
                               const MeasureOptions& opts = {},
                               Execution exec = Execution::Parallel);

}  // namespace wifiseg
