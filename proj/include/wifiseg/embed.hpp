#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "wifiseg/distance.hpp"
#include "wifiseg/eval.hpp"

namespace wifiseg {

struct Embedding {
  std::vector<std::size_t> segment_ids;
  std::size_t dim = 2;
  std::vector<double> coords;       // row-major, segment_ids.size() x dim
  std::vector<double> eigenvalues;  // top `dim`, negatives reported as found
  std::size_t zeroed_eigenvalues = 0;  // negative eigenvalues among the top `dim`
  double stress = 0.0;              // Kruskal stress-1

  double at(std::size_t row, std::size_t axis) const { return coords[row * dim + axis]; }
};

/// Classical (Torgerson) scaling of a symmetric, zero-diagonal distance
/// matrix. Output is centered, aligned with its principal axes and each axis
/// is oriented so the first segment with a non-negligible coordinate on it is
/// positive.
Embedding classical_mds(const DistanceMatrix& m, std::size_t dim = 2,
                        Warnings* warnings = nullptr);

Embedding classical_mds(std::span<const double> distances, std::size_t n, std::size_t dim = 2,
                        Warnings* warnings = nullptr);

/// Pairwise Euclidean distances between embedded points, row-major.
std::vector<double> embedded_distances(const Embedding& e);

void write_embedding_csv(std::ostream& out, const Embedding& e,
                         std::span<const LabeledSegment> labels = {});
void write_embedding_svg(std::ostream& out, const Embedding& e,
                         std::span<const LabeledSegment> labels = {});

}  // namespace wifiseg
