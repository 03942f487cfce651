#include "wifiseg/distance.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

namespace wifiseg {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::KlDivergence: return "kl";
    case Measure::SymmetrizedKl: return "skl";
    case Measure::JensenShannon: return "jsd";
    case Measure::BhattacharyyaCoefficient: return "bc";
    case Measure::BhattacharyyaDistance: return "bhattacharyya";
    case Measure::Hellinger: return "hellinger";
    case Measure::KolmogorovSmirnov: return "ks";
    case Measure::EarthMovers: return "emd";
    case Measure::MeanAbsDiff: return "mean";
  }
  return "?";
}

Measure measure_from_string(std::string_view s) {
  for (Measure m : kAllMeasures)
    if (to_string(m) == s) return m;
  throw UsageError("unknown measure '" + std::string(s) +
                   "' (expected kl, skl, jsd, bc, bhattacharyya, hellinger, ks, emd or mean)");
}

bool is_aggregatable(Measure m) {
  return std::find(kAggregatableMeasures.begin(), kAggregatableMeasures.end(), m) !=
         kAggregatableMeasures.end();
}

bool requires_positive_mass(Measure m) {
  switch (m) {
    case Measure::KlDivergence:
    case Measure::SymmetrizedKl:
    case Measure::JensenShannon:
    case Measure::BhattacharyyaCoefficient:
    case Measure::BhattacharyyaDistance:
    case Measure::Hellinger:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(Norm n) { return n == Norm::L1 ? "l1" : "l2"; }

Norm norm_from_string(std::string_view s) {
  if (s == "l1" || s == "1") return Norm::L1;
  if (s == "l2" || s == "2") return Norm::L2;
  throw UsageError("unknown norm '" + std::string(s) + "' (expected l1 or l2)");
}

DiscretizedLikelihood discretize(const UnivariateLikelihood& l, const EvaluationGrid& grid) {
  DiscretizedLikelihood d;
  d.mean = l.mean();
  if (const auto* p = std::get_if<Pmf>(&l.payload())) {
    d.discrete = true;
    d.strictly_positive = p->laplace_epsilon > 0.0;
    d.density.assign(p->mass.begin(), p->mass.end());
    d.weights.assign(kSupportSize, 1.0);
    d.cdf.resize(kSupportSize);
    double acc = 0.0;
    for (std::size_t i = 0; i < kSupportSize; ++i) {
      acc += p->mass[i];
      d.cdf[i] = acc;
    }
    d.spacing = 1.0;
  } else {
    grid.validate();
    const std::size_t nodes = grid.cells() + 1;
    d.strictly_positive = true;
    d.density.resize(nodes);
    d.cdf.resize(nodes);
    d.weights.assign(nodes, grid.step);
    d.weights.front() = d.weights.back() = 0.5 * grid.step;
    for (std::size_t i = 0; i < nodes; ++i) {
      d.density[i] = l.density(grid.node(i));
      d.cdf[i] = l.cdf(grid.node(i));
    }
    d.spacing = grid.step;
  }
  for (std::size_t i = 0; i < d.density.size(); ++i) d.total += d.weights[i] * d.density[i];
  return d;
}

namespace {

// KL between the two densities after normalizing each to unit mass on the
// evaluation points: (1/Sa) sum w a log(a/b) + log(Sb/Sa).
double kl_normalized(std::span<const double> a, double total_a, std::span<const double> b,
                     double total_b, std::span<const double> w, bool discrete, double floor) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] <= 0.0 || (!discrete && a[i] < floor)) continue;
    double bi = b[i];
    if (bi <= 0.0) {
      if (discrete)
        throw NumericError("KL divergence undefined: q has zero mass where p is positive");
      bi = floor;
    }
    bi = std::max(bi, floor);
    sum += w[i] * a[i] * std::log(a[i] / bi);
  }
  return std::max(0.0, sum / total_a + std::log(total_b / total_a));
}

double kl(const DiscretizedLikelihood& p, const DiscretizedLikelihood& q,
          const MeasureOptions& opts) {
  return kl_normalized(p.density, p.total, q.density, q.total, p.weights, p.discrete,
                       opts.density_floor);
}

double jensen_shannon(const DiscretizedLikelihood& p, const DiscretizedLikelihood& q,
                      const MeasureOptions& opts) {
  const std::size_t n = p.density.size();
  std::vector<double> pn(n), qn(n), mix(n);
  double tp = 0.0, tq = 0.0, tm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pn[i] = p.density[i] / p.total;
    qn[i] = q.density[i] / q.total;
    mix[i] = 0.5 * (pn[i] + qn[i]);
    tp += p.weights[i] * pn[i];
    tq += p.weights[i] * qn[i];
    tm += p.weights[i] * mix[i];
  }
  const double value =
      0.5 * (kl_normalized(pn, tp, mix, tm, p.weights, p.discrete, opts.density_floor) +
             kl_normalized(qn, tq, mix, tm, p.weights, p.discrete, opts.density_floor));
  return std::clamp(value, 0.0, std::numbers::ln2);
}

double bhattacharyya_coefficient(const DiscretizedLikelihood& p, const DiscretizedLikelihood& q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.density.size(); ++i)
    sum += p.weights[i] * std::sqrt(p.density[i] * q.density[i]);
  return std::clamp(sum / std::sqrt(p.total * q.total), 0.0, 1.0);
}

double kolmogorov_smirnov(const DiscretizedLikelihood& p, const DiscretizedLikelihood& q) {
  double best = 0.0;
  for (std::size_t i = 0; i < p.cdf.size(); ++i) best = std::max(best, std::abs(p.cdf[i] - q.cdf[i]));
  return std::min(best, 1.0);
}

double earth_movers(const DiscretizedLikelihood& p, const DiscretizedLikelihood& q) {
  const std::size_t n = p.cdf.size();
  double sum = 0.0;
  if (p.discrete) {
    // Step CDFs: constant on [r, r+1), and equal to 1 from -10 onward.
    for (std::size_t i = 0; i + 1 < n; ++i) sum += std::abs(p.cdf[i] - q.cdf[i]);
    return sum;
  }
  for (std::size_t i = 0; i < n; ++i) sum += p.weights[i] * std::abs(p.cdf[i] - q.cdf[i]);
  return sum;
}

}  // namespace

DistanceValue univariate_distance(const DiscretizedLikelihood& p, const DiscretizedLikelihood& q,
                                  Measure m, const MeasureOptions& opts) {
  if (p.discrete != q.discrete || p.density.size() != q.density.size())
    throw UsageError("distance between likelihoods with incompatible representations");
  if (p.discrete && requires_positive_mass(m) && !(p.strictly_positive && q.strictly_positive))
    throw UsageError("measure '" + std::string(to_string(m)) +
                     "' on PMFs requires Laplace smoothing (epsilon > 0)");

  switch (m) {
    case Measure::KlDivergence:
      return {kl(p, q, opts)};
    case Measure::SymmetrizedKl:
      return {kl(p, q, opts) + kl(q, p, opts)};
    case Measure::JensenShannon:
      return {jensen_shannon(p, q, opts)};
    case Measure::BhattacharyyaCoefficient:
      return {bhattacharyya_coefficient(p, q)};
    case Measure::BhattacharyyaDistance: {
      const double bc = bhattacharyya_coefficient(p, q);
      if (bc <= 0.0) return {opts.bhattacharyya_cap, true};
      const double value = std::max(0.0, -std::log(bc));
      if (value > opts.bhattacharyya_cap) return {opts.bhattacharyya_cap, true};
      return {value};
    }
    case Measure::Hellinger:
      return {std::sqrt(std::max(0.0, 1.0 - bhattacharyya_coefficient(p, q)))};
    case Measure::KolmogorovSmirnov:
      return {kolmogorov_smirnov(p, q)};
    case Measure::EarthMovers:
      return {earth_movers(p, q)};
    case Measure::MeanAbsDiff:
      return {std::abs(p.mean - q.mean)};
  }
  throw UsageError("unknown measure");
}

DistanceValue univariate_distance(const UnivariateLikelihood& p, const UnivariateLikelihood& q,
                                  Measure m, const MeasureOptions& opts) {
  if (p.estimator() != q.estimator() &&
      (p.estimator() == Estimator::Pmf || q.estimator() == Estimator::Pmf))
    throw UsageError("cannot compare a PMF with a continuous likelihood");
  return univariate_distance(discretize(p, opts.grid), discretize(q, opts.grid), m, opts);
}

namespace {

struct PreparedFingerprint {
  std::vector<std::pair<std::string_view, DiscretizedLikelihood>> per_ap;  // sorted by bssid
};

PreparedFingerprint prepare(const SegmentFingerprint& fp, const EvaluationGrid& grid) {
  PreparedFingerprint out;
  out.per_ap.reserve(fp.per_ap.size());
  for (const auto& [bssid, l] : fp.per_ap) out.per_ap.emplace_back(bssid, discretize(l, grid));
  return out;
}

void check_compatible(const SegmentFingerprint& a, const SegmentFingerprint& b) {
  if (a.method != b.method || !(a.options == b.options))
    throw UsageError("fingerprints " + std::to_string(a.segment_id) + " and " +
                     std::to_string(b.segment_id) + " were built with different estimator options");
}

void check_measure(Measure m) {
  if (!is_aggregatable(m))
    throw UsageError("measure '" + std::string(to_string(m)) +
                     "' is asymmetric or a similarity and cannot be aggregated");
}

// Merge-walk over the sorted AP lists; terms accumulate in bssid order.
DistanceValue aggregate(const PreparedFingerprint& a, const PreparedFingerprint& b,
                        const DiscretizedLikelihood& invisible, Measure m, Norm norm,
                        const MeasureOptions& opts) {
  DistanceValue out;
  double sum = 0.0;
  auto add = [&](const DiscretizedLikelihood& p, const DiscretizedLikelihood& q) {
    const DistanceValue d = univariate_distance(p, q, m, opts);
    out.capped = out.capped || d.capped;
    sum += norm == Norm::L1 ? d.value : d.value * d.value;
  };
  std::size_t i = 0, j = 0;
  while (i < a.per_ap.size() || j < b.per_ap.size()) {
    if (j == b.per_ap.size() || (i < a.per_ap.size() && a.per_ap[i].first < b.per_ap[j].first)) {
      add(a.per_ap[i].second, invisible);
      ++i;
    } else if (i == a.per_ap.size() || b.per_ap[j].first < a.per_ap[i].first) {
      add(invisible, b.per_ap[j].second);
      ++j;
    } else {
      add(a.per_ap[i].second, b.per_ap[j].second);
      ++i;
      ++j;
    }
  }
  out.value = norm == Norm::L1 ? sum : std::sqrt(sum);
  return out;
}

}  // namespace

DistanceValue segment_distance(const SegmentFingerprint& a, const SegmentFingerprint& b, Measure m,
                               Norm norm, const MeasureOptions& opts) {
  check_measure(m);
  check_compatible(a, b);
  const auto invisible = discretize(invisible_likelihood(a.method, a.options), opts.grid);
  return aggregate(prepare(a, opts.grid), prepare(b, opts.grid), invisible, m, norm, opts);
}

DistanceMatrix pairwise_matrix(std::span<const SegmentFingerprint> fps, Measure m, Norm norm,
                               const MeasureOptions& opts, Execution exec) {
  check_measure(m);
  if (fps.size() < 2) throw UsageError("a distance matrix needs at least two fingerprints");
  for (const auto& fp : fps) check_compatible(fps.front(), fp);
  opts.grid.validate();

  const std::size_t n = fps.size();
  DistanceMatrix out;
  out.measure = m;
  out.norm = norm;
  out.estimator = fps.front().method;
  out.estimator_options = fps.front().options;
  out.measure_options = opts;
  out.values.assign(n * n, 0.0);
  for (const auto& fp : fps) out.segment_ids.push_back(fp.segment_id);

  std::vector<PreparedFingerprint> prepared(n);
  const auto invisible =
      discretize(invisible_likelihood(fps.front().method, fps.front().options), opts.grid);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<char> capped(pairs.size(), 0);

  auto compute = [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const DistanceValue d = aggregate(prepared[i], prepared[j], invisible, m, norm, opts);
    out.values[i * n + j] = d.value;
    out.values[j * n + i] = d.value;
    capped[k] = d.capped;
  };

  if (exec == Execution::Parallel) {
    std::exception_ptr failure;
    const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
    {
#pragma omp for schedule(dynamic)
      for (std::ptrdiff_t i = 0; i < nn; ++i)
        prepared[static_cast<std::size_t>(i)] = prepare(fps[static_cast<std::size_t>(i)], opts.grid);
      const auto np = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp for schedule(dynamic, 16)
      for (std::ptrdiff_t k = 0; k < np; ++k) {
        try {
          compute(static_cast<std::size_t>(k));
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < n; ++i) prepared[i] = prepare(fps[i], opts.grid);
    for (std::size_t k = 0; k < pairs.size(); ++k) compute(k);
  }
  out.capped_entries = static_cast<std::size_t>(std::count(capped.begin(), capped.end(), 1));
  return out;
}

}  // namespace wifiseg
