#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wifiseg/likelihood.hpp"

using namespace wifiseg;

namespace {

const Pmf& pmf(const UnivariateLikelihood& l) { return std::get<Pmf>(l.payload()); }
const Normal& normal(const UnivariateLikelihood& l) { return std::get<Normal>(l.payload()); }
const Kde& kde(const UnivariateLikelihood& l) { return std::get<Kde>(l.payload()); }

double kde_oracle(const std::vector<int>& xs, double h, double x) {
  double s = 0.0;
  for (int xi : xs) s += std::exp(-0.5 * std::pow((x - xi) / h, 2)) / std::sqrt(2 * M_PI);
  return s / (static_cast<double>(xs.size()) * h);
}

std::vector<int> random_values(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> n(1, 30), v(lo, hi);
  std::vector<int> out(static_cast<std::size_t>(n(rng)));
  for (int& x : out) x = v(rng);
  return out;
}

}  // namespace

TEST_CASE("estimate_pmf frequencies") {
  const auto l = estimate_pmf(std::vector<int>{-70, -70, -68}, 0.0);
  CHECK(pmf(l).at(-70) == doctest::Approx(2.0 / 3.0));
  CHECK(pmf(l).at(-68) == doctest::Approx(1.0 / 3.0));
  CHECK(pmf(l).at(-69) == 0.0);
  CHECK(l.source_count() == 3);
  CHECK(pmf(estimate_pmf(std::vector<int>{}, 0.0)).at(-100) == 1.0);
}

TEST_CASE("estimate_pmf smoothing arithmetic") {
  const auto l = estimate_pmf(std::vector<int>{-70}, 0.01);
  CHECK(pmf(l).at(-70) == doctest::Approx(1.01 / 1.91).epsilon(1e-14));
  CHECK(pmf(l).at(-20) == doctest::Approx(0.01 / 1.91).epsilon(1e-14));
  CHECK(pmf(l).at(-20) == doctest::Approx(0.005236).epsilon(1e-4));
  CHECK_THROWS(estimate_pmf(std::vector<int>{-101}, 0.0));
  CHECK_THROWS_AS(estimate_pmf(std::vector<int>{-70}, -1.0), UsageError);
}

TEST_CASE("estimate_normal") {
  const auto l = estimate_normal(std::vector<int>{-70, -70, -68});
  CHECK(normal(l).mu == doctest::Approx(-69.0 - 1.0 / 3.0).epsilon(1e-15));
  CHECK(normal(l).sigma2 == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(normal(estimate_normal(std::vector<int>{-55})) == Normal{-55.0, 1.0});
  CHECK(normal(estimate_normal(std::vector<int>{})) == Normal{-100.0, 1.0});
  CHECK(normal(estimate_normal(std::vector<int>{-60, -60, -60}, 2.5)).sigma2 == 2.5);
}

TEST_CASE("property: normal matches two-pass oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto v = random_values(rng, -99, -11);
    v.push_back(-50);
    v.push_back(-49);
    double mean = 0.0;
    for (int x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (int x : v) ss += (x - mean) * (x - mean);
    const double var = std::max(1.0, ss / static_cast<double>(v.size() - 1));
    const auto l = estimate_normal(v);
    CHECK(normal(l).mu == doctest::Approx(mean).epsilon(1e-14));
    CHECK(normal(l).sigma2 == doctest::Approx(var).epsilon(1e-13));
  }
}

TEST_CASE("estimate_kde") {
  const auto one = estimate_kde(std::vector<int>{-70}, 2.0);
  CHECK(one.density(-70.0) == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0 * M_PI))).epsilon(1e-15));
  CHECK(one.density(-70.0) == doctest::Approx(0.19947).epsilon(1e-4));
  const std::vector<int> two{-70, -60};
  CHECK(estimate_kde(two, 2.0).density(-65.0) == doctest::Approx(kde_oracle(two, 2.0, -65.0)).epsilon(1e-14));
  CHECK(kde(estimate_kde(std::vector<int>{}, 2.0)).samples == std::vector<double>{-100.0});
  CHECK_THROWS_AS(estimate_kde(two, 0.0), UsageError);
  CHECK_THROWS_AS(estimate_kde(two, -1.0), UsageError);
}

TEST_CASE("estimate dispatch and invisible likelihoods") {
  EstimatorOptions o;
  o.laplace_epsilon = 1e-6;
  const std::vector<int> v{-60, -61};
  CHECK(estimate(Estimator::Pmf, v, o) == estimate_pmf(v, 1e-6));
  CHECK(estimate(Estimator::Normal, v, o) == estimate_normal(v, 1.0));
  CHECK(estimate(Estimator::Kde, v, o) == estimate_kde(v, 2.0));
  CHECK(invisible_likelihood(Estimator::Kde, o).mean() == -100.0);
  CHECK(invisible_likelihood(Estimator::Normal, o).mean() == -100.0);
  CHECK(pmf(invisible_likelihood(Estimator::Pmf, o)).at(-100) > 0.99);
  CHECK(invisible_likelihood(Estimator::Pmf, o).source_count() == 0);
  CHECK(estimator_from_string("kde") == Estimator::Kde);
  CHECK(to_string(Estimator::Normal) == "normal");
  CHECK_THROWS_AS(estimator_from_string("gmm"), UsageError);
}

TEST_CASE("evaluate_on_grid") {
  const EvaluationGrid g;
  CHECK(g.cells() == 200);
  SUBCASE("pmf step") {
    const auto ge = evaluate_on_grid(estimate_pmf(std::vector<int>{-70}, 0.0), g);
    const auto cell = static_cast<std::size_t>((-70.0 - g.lo) / g.step);
    CHECK(ge.cdf[cell - 1] == 0.0);
    CHECK(ge.cdf[cell] == 1.0);
    CHECK(ge.pdf[cell] * g.step == 1.0);
  }
  SUBCASE("symmetric continuous cdf") {
    const auto cell = static_cast<std::size_t>((-70.0 - g.lo) / g.step) - 1;  // right edge at -70
    CHECK(evaluate_on_grid(UnivariateLikelihood(Normal{-70, 4}, 1), g).cdf[cell] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(evaluate_on_grid(estimate_kde(std::vector<int>{-70}, 2.0), g).cdf[cell] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("coverage warning") {
    Warnings w;
    evaluate_on_grid(estimate_kde(std::vector<int>{-70}, 2.0), EvaluationGrid{-90, -50, 0.5}, &w);
    CHECK(w.size() == 1);
  }
  SUBCASE("invalid grid") {
    CHECK_THROWS_AS(evaluate_on_grid(estimate_kde(std::vector<int>{-70}, 2.0), EvaluationGrid{-5, -105, 0.5}),
                    UsageError);
    CHECK_THROWS_AS(EvaluationGrid({-105, -5, 0.3}).validate(), UsageError);
  }
}

TEST_CASE("property: KDE grid density matches direct summation") {
  std::mt19937_64 rng(3);
  const EvaluationGrid g;
  for (int trial = 0; trial < 30; ++trial) {
    const auto v = random_values(rng, -100, -10);
    const double h = 0.5 + trial * 0.2;
    const auto ge = evaluate_on_grid(estimate_kde(v, h), g);
    double worst = 0.0;
    for (std::size_t c = 0; c < ge.pdf.size(); ++c)
      worst = std::max(worst, std::abs(ge.pdf[c] - kde_oracle(v, h, g.midpoint(c))));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("property: normalization") {
  std::mt19937_64 rng(4);
  const EvaluationGrid g;
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_values(rng, -100, -10);
    for (double eps : {0.0, 1e-6, 0.1}) {
      const auto l = estimate_pmf(v, eps);
      const auto& p = pmf(l);
      CHECK(std::accumulate(p.mass.begin(), p.mass.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::all_of(p.mass.begin(), p.mass.end(), [&](double m) { return eps == 0.0 || m > 0.0; }));
    }
    // Continuous densities integrate to one when their mass lies inside the grid margins.
    const int c = -85 + trial % 60;
    const auto inner = random_values(rng, c, c + 8);
    for (const auto& l : {estimate_kde(inner, 2.0), estimate_normal(inner)}) {
      const auto ge = evaluate_on_grid(l, g);
      const double integral = std::accumulate(ge.pdf.begin(), ge.pdf.end(), 0.0) * g.step;
      CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
      CHECK(std::is_sorted(ge.cdf.begin(), ge.cdf.end()));
      CHECK(ge.cdf.back() == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: smoothing keeps the mode") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_values(rng, -100, -10);
    const auto raw = pmf(estimate_pmf(v, 0.0)).mass;
    const auto smooth = pmf(estimate_pmf(v, 1e-3)).mass;
    CHECK(std::max_element(raw.begin(), raw.end()) - raw.begin() ==
          std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
  }
}

TEST_CASE("fingerprint_segment") {
  WifiSegment seg;
  seg.segment_id = 4;
  seg.device = "d";
  seg.observations = {{0, "d", "b1", std::nullopt, -60},
                      {0, "d", "b2", std::nullopt, -70},
                      {3000, "d", "b1", std::nullopt, -62}};
  const std::set<std::string> universe{"b1", "b2", "b3"};
  EstimatorOptions on;
  const auto fp = fingerprint_segment(seg, universe, Estimator::Pmf, on);
  CHECK(fp.segment_id == 4);
  REQUIRE(fp.per_ap.size() == 3);
  CHECK(pmf(fp.per_ap.at("b3")).at(-100) == 1.0);
  CHECK(fp.per_ap.at("b1") == estimate_pmf(std::vector<int>{-60, -62}, 0.0));
  EstimatorOptions off;
  off.invisibility = false;
  CHECK(fingerprint_segment(seg, universe, Estimator::Kde, off).per_ap.size() == 2);
  CHECK_THROWS_AS(fingerprint_segment(WifiSegment{}, universe, Estimator::Kde, on), UsageError);
}

TEST_CASE("fingerprint_segments serial equals parallel") {
  std::mt19937_64 rng(6);
  std::vector<WifiSegment> segs(25);
  std::set<std::string> universe;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    segs[i].segment_id = i;
    segs[i].device = "d";
    for (int k = 0; k < 40; ++k) {
      const std::string b = "ap" + std::to_string(rng() % 6);
      universe.insert(b);
      segs[i].observations.push_back({k * 1000LL, "d", b, std::nullopt, -40 - static_cast<int>(rng() % 50)});
    }
  }
  for (auto e : {Estimator::Pmf, Estimator::Normal, Estimator::Kde})
    CHECK(fingerprint_segments(segs, universe, e, {}, Execution::Serial) ==
          fingerprint_segments(segs, universe, e, {}, Execution::Parallel));
}
