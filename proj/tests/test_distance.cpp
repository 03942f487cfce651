#include <doctest.h>

#include <cmath>
#include <random>

#include "wifiseg/distance.hpp"

using namespace wifiseg;

namespace {

std::array<double, kSupportSize> smoothed(const std::map<int, double>& m, double eps) {
  std::array<double, kSupportSize> p{};
  for (auto [r, v] : m) p[static_cast<std::size_t>(r - kRssiMin)] = v;
  for (double& v : p) v = (v + eps) / (1.0 + eps * kSupportSize);
  return p;
}

double kl_oracle(const std::array<double, kSupportSize>& p, const std::array<double, kSupportSize>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < kSupportSize; ++i) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

double jsd_oracle(const std::array<double, kSupportSize>& p, const std::array<double, kSupportSize>& q) {
  std::array<double, kSupportSize> m{};
  for (std::size_t i = 0; i < kSupportSize; ++i) m[i] = 0.5 * (p[i] + q[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < kSupportSize; ++i) {
    if (p[i] > 0) s += 0.5 * p[i] * std::log(p[i] / m[i]);
    if (q[i] > 0) s += 0.5 * q[i] * std::log(q[i] / m[i]);
  }
  return s;
}

UnivariateLikelihood point(int r, double eps = 0.0) { return estimate_pmf(std::vector<int>{r}, eps); }
UnivariateLikelihood gauss(double mu, double s2) { return UnivariateLikelihood(Normal{mu, s2}, 1); }

SegmentFingerprint fingerprint(std::size_t id, std::map<std::string, UnivariateLikelihood> aps,
                               Estimator e = Estimator::Normal) {
  SegmentFingerprint fp;
  fp.segment_id = id;
  fp.device = "d";
  fp.method = e;
  fp.per_ap = std::move(aps);
  return fp;
}

std::vector<SegmentFingerprint> random_fingerprints(std::size_t n, Estimator e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> r(-95, -30), k(1, 15);
  std::vector<SegmentFingerprint> out;
  EstimatorOptions opts;
  opts.laplace_epsilon = 1e-6;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string, UnivariateLikelihood> aps;
    for (int a = 0; a < 5; ++a) {
      if (rng() % 4 == 0) continue;
      std::vector<int> v(static_cast<std::size_t>(k(rng)));
      for (int& x : v) x = r(rng);
      aps.emplace("ap" + std::to_string(a), estimate(e, v, opts));
    }
    auto fp = fingerprint(i, std::move(aps), e);
    fp.options = opts;
    out.push_back(std::move(fp));
  }
  return out;
}

}  // namespace

TEST_CASE("measure names") {
  for (auto m : kAllMeasures) CHECK(measure_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(measure_from_string("cosine"), UsageError);
  CHECK(norm_from_string("l1") == Norm::L1);
  CHECK_FALSE(is_aggregatable(Measure::KlDivergence));
  CHECK_FALSE(is_aggregatable(Measure::BhattacharyyaCoefficient));
  CHECK(is_aggregatable(Measure::EarthMovers));
}

TEST_CASE("univariate examples") {
  CHECK(univariate_distance(point(-70), point(-60), Measure::EarthMovers).value == 10.0);
  CHECK(univariate_distance(point(-80), point(-40), Measure::KolmogorovSmirnov).value == 1.0);
  CHECK(univariate_distance(gauss(-70, 4), gauss(-60, 9), Measure::MeanAbsDiff).value == 10.0);
  const auto p = estimate_kde(std::vector<int>{-70, -66, -61}, 2.0);
  CHECK(univariate_distance(p, p, Measure::Hellinger).value == 0.0);
  CHECK(univariate_distance(p, p, Measure::BhattacharyyaCoefficient).value == 1.0);
  for (auto m : kAllMeasures) {
    if (m == Measure::BhattacharyyaCoefficient) continue;
    CHECK(univariate_distance(p, p, m).value == 0.0);
    const auto s = point(-70, 1e-6);
    CHECK(univariate_distance(s, s, m).value == 0.0);
  }
}

TEST_CASE("symmetrized KL and JSD against brute-force summation") {
  const double eps = 1e-6;
  const auto p = estimate_pmf(std::vector<int>{-70, -68}, eps);
  const auto q = estimate_pmf(std::vector<int>{-70}, eps);
  const auto po = smoothed({{-70, 0.5}, {-68, 0.5}}, eps);
  const auto qo = smoothed({{-70, 1.0}}, eps);
  CHECK(univariate_distance(p, q, Measure::SymmetrizedKl).value ==
        doctest::Approx(kl_oracle(po, qo) + kl_oracle(qo, po)).epsilon(1e-12));
  CHECK(univariate_distance(p, q, Measure::KlDivergence).value ==
        doctest::Approx(kl_oracle(po, qo)).epsilon(1e-12));

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> r(-100, -10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(1 + trial % 9), b(1 + trial % 5);
    for (int& x : a) x = r(rng);
    for (int& x : b) x = r(rng);
    const auto lp = estimate_pmf(a, 1e-3), lq = estimate_pmf(b, 1e-3);
    const auto& mp = std::get<Pmf>(lp.payload()).mass;
    const auto& mq = std::get<Pmf>(lq.payload()).mass;
    const double jsd = univariate_distance(lp, lq, Measure::JensenShannon).value;
    CHECK(jsd == doctest::Approx(jsd_oracle(mp, mq)).epsilon(1e-12));
    CHECK(jsd <= std::log(2.0));
    CHECK(jsd >= 0.0);
  }
}

TEST_CASE("Gaussian Hellinger closed form") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> mu(-80, -30), var(1, 30);
  for (int trial = 0; trial < 100; ++trial) {
    const double m1 = mu(rng), v1 = var(rng), m2 = mu(rng), v2 = var(rng);
    const double bc = std::sqrt(2 * std::sqrt(v1 * v2) / (v1 + v2)) *
                      std::exp(-(m1 - m2) * (m1 - m2) / (4 * (v1 + v2)));
    CHECK(univariate_distance(gauss(m1, v1), gauss(m2, v2), Measure::Hellinger).value ==
          doctest::Approx(std::sqrt(1 - bc)).epsilon(1e-4));
  }
}

TEST_CASE("positive mass preconditions and caps") {
  CHECK_THROWS_AS(univariate_distance(point(-70), point(-60), Measure::KlDivergence), UsageError);
  CHECK_THROWS_AS(univariate_distance(point(-70), point(-60), Measure::BhattacharyyaDistance), UsageError);
  CHECK_NOTHROW(univariate_distance(point(-70), point(-60), Measure::EarthMovers));
  // Disjoint Gaussians underflow to BC = 0.
  const auto d = univariate_distance(gauss(-95, 1), gauss(-15, 1), Measure::BhattacharyyaDistance);
  CHECK(d.capped);
  CHECK(d.value == 50.0);
  MeasureOptions o;
  o.bhattacharyya_cap = 7.0;
  CHECK(univariate_distance(gauss(-95, 1), gauss(-15, 1), Measure::BhattacharyyaDistance, o).value == 7.0);
  CHECK_FALSE(univariate_distance(gauss(-70, 1), gauss(-69, 1), Measure::BhattacharyyaDistance).capped);
}

TEST_CASE("property: bounded ranges") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> mu(-90, -20), var(1, 40);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = gauss(mu(rng), var(rng)), q = gauss(mu(rng), var(rng));
    const double jsd = univariate_distance(p, q, Measure::JensenShannon).value;
    const double h = univariate_distance(p, q, Measure::Hellinger).value;
    const double ks = univariate_distance(p, q, Measure::KolmogorovSmirnov).value;
    const double bc = univariate_distance(p, q, Measure::BhattacharyyaCoefficient).value;
    CHECK((jsd >= 0 && jsd <= std::log(2.0)));
    CHECK((h >= 0 && h <= 1));
    CHECK((ks >= 0 && ks <= 1));
    CHECK((bc >= 0 && bc <= 1));
  }
}

TEST_CASE("EMD of translated copies equals the shift") {
  for (int shift = 0; shift <= 30; shift += 3) {
    CHECK(univariate_distance(point(-90), point(-90 + shift), Measure::EarthMovers).value == shift);
    const auto a = estimate_kde(std::vector<int>{-80, -77, -75}, 2.0);
    const auto b = estimate_kde(std::vector<int>{-80 + shift, -77 + shift, -75 + shift}, 2.0);
    CHECK(std::abs(univariate_distance(a, b, Measure::EarthMovers).value - shift) <= 1.0);
  }
}

TEST_CASE("segment_distance aggregation") {
  const auto base = fingerprint(0, {{"a", gauss(-60, 4)}, {"b", gauss(-70, 4)}});
  SUBCASE("identical") {
    for (auto m : kAggregatableMeasures)
      for (auto n : {Norm::L1, Norm::L2}) CHECK(segment_distance(base, base, m, n).value == 0.0);
  }
  SUBCASE("single differing AP") {
    const auto other = fingerprint(1, {{"a", gauss(-63, 4)}, {"b", gauss(-70, 4)}});
    CHECK(segment_distance(base, other, Measure::MeanAbsDiff, Norm::L1).value == 3.0);
    CHECK(segment_distance(base, other, Measure::MeanAbsDiff, Norm::L2).value == 3.0);
  }
  SUBCASE("3-4-5") {
    const auto other = fingerprint(1, {{"a", gauss(-63, 4)}, {"b", gauss(-74, 4)}});
    CHECK(segment_distance(base, other, Measure::MeanAbsDiff, Norm::L1).value == 7.0);
    CHECK(segment_distance(base, other, Measure::MeanAbsDiff, Norm::L2).value == 5.0);
  }
  SUBCASE("one-sided AP meets the invisible likelihood") {
    const auto other = fingerprint(1, {{"a", gauss(-60, 4)}});
    CHECK(segment_distance(base, other, Measure::MeanAbsDiff, Norm::L1).value == 30.0);
  }
  SUBCASE("APs invisible on both sides change nothing") {
    auto inv = invisible_likelihood(Estimator::Normal, {});
    auto a = fingerprint(0, {{"a", gauss(-60, 4)}});
    auto b = fingerprint(1, {{"a", gauss(-66, 9)}});
    const double before = segment_distance(a, b, Measure::Hellinger, Norm::L2).value;
    a.per_ap.emplace("z", inv);
    b.per_ap.emplace("z", inv);
    CHECK(segment_distance(a, b, Measure::Hellinger, Norm::L2).value == before);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(segment_distance(base, base, Measure::KlDivergence, Norm::L1), UsageError);
    CHECK_THROWS_AS(segment_distance(base, base, Measure::BhattacharyyaCoefficient, Norm::L1), UsageError);
    auto other = base;
    other.options.bandwidth = 3.0;
    CHECK_THROWS_AS(segment_distance(base, other, Measure::EarthMovers, Norm::L1), UsageError);
  }
}

TEST_CASE("pairwise_matrix") {
  SUBCASE("identical fingerprints") {
    const auto fp = fingerprint(0, {{"a", gauss(-60, 4)}});
    std::vector<SegmentFingerprint> fps{fp, fp, fp};
    for (std::size_t i = 0; i < 3; ++i) fps[i].segment_id = i;
    const auto m = pairwise_matrix(fps, Measure::EarthMovers, Norm::L2);
    for (double v : m.values) CHECK(v == 0.0);
  }
  SUBCASE("errors") {
    const auto fps = random_fingerprints(3, Estimator::Normal, 1);
    CHECK_THROWS_AS(pairwise_matrix(fps, Measure::KlDivergence, Norm::L2), UsageError);
    CHECK_THROWS_AS(pairwise_matrix(std::span(fps).first(1), Measure::EarthMovers, Norm::L2), UsageError);
  }
  SUBCASE("symmetric, zero diagonal, serial equals parallel") {
    for (auto e : {Estimator::Pmf, Estimator::Normal, Estimator::Kde}) {
      const auto fps = random_fingerprints(12, e, 2);
      for (auto m : kAggregatableMeasures) {
        const auto par = pairwise_matrix(fps, m, Norm::L2, {}, Execution::Parallel);
        const auto ser = pairwise_matrix(fps, m, Norm::L2, {}, Execution::Serial);
        CHECK(par.values == ser.values);
        for (std::size_t i = 0; i < par.size(); ++i) {
          CHECK(par(i, i) == 0.0);
          for (std::size_t j = 0; j < par.size(); ++j) {
            CHECK(par(i, j) == par(j, i));
            CHECK(par(i, j) >= 0.0);
            if (i < j) CHECK(par(i, j) == segment_distance(fps[i], fps[j], m, Norm::L2).value);
          }
        }
      }
    }
  }
}
