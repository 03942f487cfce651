#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wifiseg/execution.hpp"
#include "wifiseg/ingest.hpp"
#include "wifiseg/motionseg.hpp"

namespace wifiseg {

inline constexpr std::size_t kSupportSize = kRssiMax - kRssiMin + 1;  // 91 integer dBm values

/// Probability mass over the integer support [-100, -10]; index 0 is -100 dBm.
struct Pmf {
  std::array<double, kSupportSize> mass{};
  double laplace_epsilon = 0.0;  // smoothing applied at estimation time

  double at(int rssi) const;
  friend bool operator==(const Pmf&, const Pmf&) = default;
};

struct Normal {
  double mu = kInvisibleRssi;
  double sigma2 = 1.0;
  friend bool operator==(const Normal&, const Normal&) = default;
};

/// Gaussian-kernel density estimate: a mixture of N(x_i, h^2).
struct Kde {
  std::vector<double> samples;
  double bandwidth = 2.0;
  friend bool operator==(const Kde&, const Kde&) = default;
};

enum class Estimator { Pmf, Normal, Kde };

std::string_view to_string(Estimator e);
Estimator estimator_from_string(std::string_view s);

/// Per-AP univariate RSSI likelihood.
class UnivariateLikelihood {
 public:
  using Payload = std::variant<Pmf, Normal, Kde>;

  UnivariateLikelihood(Payload payload, std::size_t source_count)
      : payload_(std::move(payload)), source_count_(source_count) {}

  Estimator estimator() const { return static_cast<Estimator>(payload_.index()); }
  const Payload& payload() const { return payload_; }
  std::size_t source_count() const { return source_count_; }

  /// Density for Normal/Kde; for Pmf the mass at the nearest integer.
  double density(double x) const;
  double cdf(double x) const;
  double mean() const;

  friend bool operator==(const UnivariateLikelihood&, const UnivariateLikelihood&) = default;

 private:
  Payload payload_;
  std::size_t source_count_;
};

struct EstimatorOptions {
  double bandwidth = 2.0;          // KDE h, dBm
  double laplace_epsilon = 0.0;    // PMF smoothing constant per support point
  double sigma_min2 = 1.0;         // Normal variance floor, dBm^2
  bool invisibility = true;        // model APs missing from scans

  friend bool operator==(const EstimatorOptions&, const EstimatorOptions&) = default;
};

inline constexpr double kDefaultLaplaceEpsilon = 1e-6;

UnivariateLikelihood estimate_pmf(std::span<const int> values, double laplace_epsilon);
UnivariateLikelihood estimate_normal(std::span<const int> values, double sigma_min2 = 1.0);
UnivariateLikelihood estimate_kde(std::span<const int> values, double bandwidth);

UnivariateLikelihood estimate(Estimator method, std::span<const int> values,
                              const EstimatorOptions& opts);

/// Likelihood of an AP with no readings in the segment.
UnivariateLikelihood invisible_likelihood(Estimator method, const EstimatorOptions& opts);

double standard_normal_pdf(double z);
double standard_normal_cdf(double z);

/// Uniform quadrature grid [lo, hi] with `cells()` cells of width `step`.
struct EvaluationGrid {
  double lo = -105.0;
  double hi = -5.0;
  double step = 0.5;

  void validate() const;
  std::size_t cells() const;
  double node(std::size_t i) const { return lo + static_cast<double>(i) * step; }
  double midpoint(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * step; }

  friend bool operator==(const EvaluationGrid&, const EvaluationGrid&) = default;
};

struct GridEvaluation {
  std::vector<double> pdf;  // at cell midpoints
  std::vector<double> cdf;  // at cell right edges
  double tail_mass = 0.0;   // probability outside [lo, hi]
};

GridEvaluation evaluate_on_grid(const UnivariateLikelihood& l, const EvaluationGrid& g,
                                Warnings* warnings = nullptr);

struct SegmentFingerprint {
  std::size_t segment_id = 0;
  std::string device;
  Estimator method = Estimator::Pmf;
  EstimatorOptions options;
  std::map<std::string, UnivariateLikelihood> per_ap;

  friend bool operator==(const SegmentFingerprint&, const SegmentFingerprint&) = default;
};

/// One likelihood per AP seen in the segment, plus (with invisibility on)
/// every other AP of `universe` with the empty-input likelihood.
SegmentFingerprint fingerprint_segment(const WifiSegment& seg, const std::set<std::string>& universe,
                                       Estimator method, const EstimatorOptions& opts);

std::vector<SegmentFingerprint> fingerprint_segments(std::span<const WifiSegment> segs,
                                                     const std::set<std::string>& universe,
                                                     Estimator method, const EstimatorOptions& opts,
                                                     Execution exec = Execution::Parallel);

}  // namespace wifiseg
