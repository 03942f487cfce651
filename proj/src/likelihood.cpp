#include "wifiseg/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace wifiseg {

namespace {

std::size_t support_index(int rssi) { return static_cast<std::size_t>(rssi - kRssiMin); }
int support_value(std::size_t i) { return kRssiMin + static_cast<int>(i); }

void check_support(std::span<const int> values) {
  for (int v : values)
    if (v < kRssiMin || v > kRssiMax)
      throw DataError("rssi " + std::to_string(v) + " outside the supported range");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double standard_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double Pmf::at(int rssi) const {
  if (rssi < kRssiMin || rssi > kRssiMax) return 0.0;
  return mass[support_index(rssi)];
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Pmf: return "pmf";
    case Estimator::Normal: return "normal";
    case Estimator::Kde: return "kde";
  }
  return "?";
}

Estimator estimator_from_string(std::string_view s) {
  if (s == "pmf") return Estimator::Pmf;
  if (s == "normal") return Estimator::Normal;
  if (s == "kde") return Estimator::Kde;
  throw UsageError("unknown estimator '" + std::string(s) + "' (expected pmf, normal or kde)");
}

double UnivariateLikelihood::density(double x) const {
  return std::visit(
      overloaded{
          [&](const Pmf& p) { return p.at(static_cast<int>(std::lround(x))); },
          [&](const Normal& n) {
            const double sd = std::sqrt(n.sigma2);
            return standard_normal_pdf((x - n.mu) / sd) / sd;
          },
          [&](const Kde& k) {
            double sum = 0.0;
            for (double xi : k.samples) sum += standard_normal_pdf((x - xi) / k.bandwidth);
            return sum / (static_cast<double>(k.samples.size()) * k.bandwidth);
          },
      },
      payload_);
}

double UnivariateLikelihood::cdf(double x) const {
  return std::visit(
      overloaded{
          [&](const Pmf& p) {
            double acc = 0.0;
            for (std::size_t i = 0; i < kSupportSize && support_value(i) <= x; ++i)
              acc += p.mass[i];
            return std::min(acc, 1.0);
          },
          [&](const Normal& n) { return standard_normal_cdf((x - n.mu) / std::sqrt(n.sigma2)); },
          [&](const Kde& k) {
            double sum = 0.0;
            for (double xi : k.samples) sum += standard_normal_cdf((x - xi) / k.bandwidth);
            return sum / static_cast<double>(k.samples.size());
          },
      },
      payload_);
}

double UnivariateLikelihood::mean() const {
  return std::visit(
      overloaded{
          [](const Pmf& p) {
            double m = 0.0;
            for (std::size_t i = 0; i < kSupportSize; ++i) m += p.mass[i] * support_value(i);
            return m;
          },
          [](const Normal& n) { return n.mu; },
          [](const Kde& k) {
            return std::accumulate(k.samples.begin(), k.samples.end(), 0.0) /
                   static_cast<double>(k.samples.size());
          },
      },
      payload_);
}

UnivariateLikelihood estimate_pmf(std::span<const int> values, double laplace_epsilon) {
  if (!(laplace_epsilon >= 0.0)) throw UsageError("laplace epsilon must be non-negative");
  check_support(values);
  Pmf p;
  p.laplace_epsilon = laplace_epsilon;
  if (values.empty()) {
    p.mass[support_index(kInvisibleRssi)] = 1.0;
  } else {
    std::array<std::size_t, kSupportSize> counts{};
    for (int v : values) ++counts[support_index(v)];
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < kSupportSize; ++i) p.mass[i] = static_cast<double>(counts[i]) / n;
  }
  if (laplace_epsilon > 0.0) {
    const double total = 1.0 + laplace_epsilon * static_cast<double>(kSupportSize);
    for (double& m : p.mass) m = (m + laplace_epsilon) / total;
  }
  return {std::move(p), values.size()};
}

UnivariateLikelihood estimate_normal(std::span<const int> values, double sigma_min2) {
  if (!(sigma_min2 > 0.0)) throw UsageError("sigma_min^2 must be positive");
  check_support(values);
  if (values.empty()) return {Normal{static_cast<double>(kInvisibleRssi), sigma_min2}, 0};
  const double n = static_cast<double>(values.size());
  double mu = 0.0;
  for (int v : values) mu += v;
  mu /= n;
  double sigma2 = sigma_min2;
  if (values.size() > 1) {
    double ss = 0.0;
    for (int v : values) ss += (v - mu) * (v - mu);
    sigma2 = std::max(ss / (n - 1.0), sigma_min2);
  }
  return {Normal{mu, sigma2}, values.size()};
}

UnivariateLikelihood estimate_kde(std::span<const int> values, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw UsageError("KDE bandwidth must be positive");
  check_support(values);
  Kde k;
  k.bandwidth = bandwidth;
  if (values.empty())
    k.samples = {static_cast<double>(kInvisibleRssi)};
  else
    k.samples.assign(values.begin(), values.end());
  return {std::move(k), values.size()};
}

UnivariateLikelihood estimate(Estimator method, std::span<const int> values,
                              const EstimatorOptions& opts) {
  switch (method) {
    case Estimator::Pmf: return estimate_pmf(values, opts.laplace_epsilon);
    case Estimator::Normal: return estimate_normal(values, opts.sigma_min2);
    case Estimator::Kde: return estimate_kde(values, opts.bandwidth);
  }
  throw UsageError("unknown estimator");
}

UnivariateLikelihood invisible_likelihood(Estimator method, const EstimatorOptions& opts) {
  return estimate(method, {}, opts);
}

void EvaluationGrid::validate() const {
  if (!(lo < hi) || !(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi))
    throw UsageError("evaluation grid requires lo < hi and step > 0");
  const double n = (hi - lo) / step;
  if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
    throw UsageError("evaluation grid span is not a whole number of steps");
}

std::size_t EvaluationGrid::cells() const {
  return static_cast<std::size_t>(std::llround((hi - lo) / step));
}

GridEvaluation evaluate_on_grid(const UnivariateLikelihood& l, const EvaluationGrid& g,
                                Warnings* warnings) {
  g.validate();
  const std::size_t n = g.cells();
  GridEvaluation out;
  out.pdf.resize(n);
  out.cdf.resize(n);
  if (const auto* p = std::get_if<Pmf>(&l.payload())) {
    std::vector<double> cell_mass(n, 0.0);
    for (std::size_t i = 0; i < kSupportSize; ++i) {
      const double r = support_value(i);
      const double pos = std::floor((r - g.lo) / g.step);
      if (pos < 0.0 || pos >= static_cast<double>(n)) {
        out.tail_mass += p->mass[i];
        continue;
      }
      cell_mass[static_cast<std::size_t>(pos)] += p->mass[i];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < kSupportSize; ++i)
      if (support_value(i) < g.lo) acc += p->mass[i];
    for (std::size_t c = 0; c < n; ++c) {
      out.pdf[c] = cell_mass[c] / g.step;
      acc += cell_mass[c];
      out.cdf[c] = acc;
    }
  } else {
    for (std::size_t c = 0; c < n; ++c) {
      out.pdf[c] = l.density(g.midpoint(c));
      out.cdf[c] = l.cdf(g.node(c + 1));
    }
    out.tail_mass = l.cdf(g.lo) + (1.0 - l.cdf(g.hi));
  }
  if (g.lo > kRssiMin || g.hi < kRssiMax)
    warn(warnings, "evaluation grid does not cover the RSSI support [-100, -10]");
  if (out.tail_mass > 1e-6)
    warn(warnings, "probability mass outside the evaluation grid: " + std::to_string(out.tail_mass));
  return out;
}

SegmentFingerprint fingerprint_segment(const WifiSegment& seg, const std::set<std::string>& universe,
                                       Estimator method, const EstimatorOptions& opts) {
  if (seg.observations.empty()) throw UsageError("cannot fingerprint an empty segment");
  std::map<std::string, std::vector<int>> values;
  for (const auto& o : seg.observations) values[o.bssid].push_back(o.rssi);

  SegmentFingerprint fp;
  fp.segment_id = seg.segment_id;
  fp.device = seg.device;
  fp.method = method;
  fp.options = opts;
  for (const auto& [bssid, v] : values) fp.per_ap.emplace(bssid, estimate(method, v, opts));
  if (opts.invisibility)
    for (const auto& b : universe)
      if (!fp.per_ap.count(b)) fp.per_ap.emplace(b, invisible_likelihood(method, opts));
  return fp;
}

std::vector<SegmentFingerprint> fingerprint_segments(std::span<const WifiSegment> segs,
                                                     const std::set<std::string>& universe,
                                                     Estimator method, const EstimatorOptions& opts,
                                                     Execution exec) {
  std::vector<SegmentFingerprint> out(segs.size());
  if (exec == Execution::Parallel) {
    const auto n = static_cast<std::ptrdiff_t>(segs.size());
    // Exceptions cannot cross the OpenMP region; the first one is rethrown.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        out[static_cast<std::size_t>(i)] =
            fingerprint_segment(segs[static_cast<std::size_t>(i)], universe, method, opts);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < segs.size(); ++i)
      out[i] = fingerprint_segment(segs[i], universe, method, opts);
  }
  return out;
}

}  // namespace wifiseg
