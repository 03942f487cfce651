#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "wifiseg/embed.hpp"

using namespace wifiseg;

namespace {

std::vector<double> planar(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(-20.0, 20.0);
  std::vector<double> x(n), y(n), d(n * n);
  for (std::size_t i = 0; i < n; ++i) x[i] = c(rng), y[i] = c(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::hypot(x[i] - x[j], y[i] - y[j]);
  return d;
}

double max_error(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

}  // namespace

TEST_CASE("3-4-5 triangle") {
  const std::vector<double> d{0, 3, 4, 3, 0, 5, 4, 5, 0};
  const auto e = classical_mds(d, 3);
  CHECK(max_error(embedded_distances(e), d) < 1e-9);
  CHECK(e.stress < 1e-9);
  CHECK(e.zeroed_eigenvalues == 0);
}

TEST_CASE("property: planar round-trip") {
  for (std::size_t n = 3; n <= 50; n += 7) {
    const auto d = planar(n, n);
    const auto e = classical_mds(d, n);
    CHECK(max_error(embedded_distances(e), d) < 1e-8);
    // Centered output.
    for (std::size_t axis = 0; axis < 2; ++axis) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += e.at(i, axis);
      CHECK(std::abs(s) < 1e-9);
    }
  }
}

TEST_CASE("deterministic orientation") {
  const auto d = planar(10, 4);
  const auto a = classical_mds(d, 10), b = classical_mds(d, 10);
  CHECK(a.coords == b.coords);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    for (std::size_t i = 0; i < 10; ++i) {
      if (std::abs(a.at(i, axis)) > 1e-9) {
        CHECK(a.at(i, axis) > 0);
        break;
      }
    }
  }
}

TEST_CASE("non-Euclidean input reports negative eigenvalues") {
  // Two negative eigenvalues; the milder one falls within the top three.
  const std::vector<double> d{0, 1, 1, 3, 1, 0, 3, 1, 1, 3, 0, 6, 3, 1, 6, 0};
  Warnings w;
  const auto e = classical_mds(d, 4, 3, &w);
  CHECK(e.zeroed_eigenvalues == 1);
  CHECK(e.eigenvalues.back() < 0.0);
  CHECK(e.stress > 0.0);
  CHECK_FALSE(w.empty());
  // Triangle inequality violated: the planar fit cannot be exact.
  const std::vector<double> t{0, 1, 10, 1, 0, 1, 10, 1, 0};
  CHECK(max_error(embedded_distances(classical_mds(t, 3)), t) > 0.1);
}

TEST_CASE("input validation") {
  CHECK_NOTHROW(classical_mds(std::vector<double>{0, 1, 1, 0}, 2, 1));
  CHECK_THROWS_AS(classical_mds(std::vector<double>{0, 1, 2, 0}, 2, 1), DataError);
  CHECK_THROWS_AS(classical_mds(std::vector<double>{1, 1, 1, 0}, 2, 1), DataError);
  CHECK_THROWS_AS(classical_mds(std::vector<double>{0, -1, -1, 0}, 2, 1), DataError);
  CHECK_THROWS_AS(classical_mds(std::vector<double>{0, 1, 1, 0}, 2, 2), UsageError);
  CHECK_THROWS_AS(classical_mds(std::vector<double>{0, 1, 1, 0}, 2, 0), UsageError);
  CHECK_THROWS_AS(classical_mds(std::vector<double>{0, 1, 1}, 2, 1), UsageError);
}

TEST_CASE("outputs") {
  const std::vector<double> d{0, 3, 4, 3, 0, 5, 4, 5, 0};
  DistanceMatrix m;
  m.segment_ids = {7, 8, 9};
  m.values = d;
  const auto e = classical_mds(m);
  CHECK(e.segment_ids == m.segment_ids);
  const std::vector<LabeledSegment> labels{{7, "a<b>", std::nullopt}, {8, "c", std::nullopt}};
  std::ostringstream csv, svg;
  write_embedding_csv(csv, e, labels);
  CHECK(csv.str().rfind("segment_id,x,y,label\n7,", 0) == 0);
  write_embedding_svg(svg, e, labels);
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("a&lt;b&gt;") != std::string::npos);
  CHECK(svg.str().find("a<b>") == std::string::npos);
}
