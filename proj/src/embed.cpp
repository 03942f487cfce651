#include "wifiseg/embed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string_view>

#include <Eigen/Dense>

#include "wifiseg/csv.hpp"

namespace wifiseg {

namespace {

constexpr double kEigenTolerance = 1e-10;

void validate_matrix(std::span<const double> d, std::size_t n) {
  if (d.size() != n * n) throw UsageError("distance matrix has wrong size");
  double scale = 0.0;
  for (double v : d) {
    if (!std::isfinite(v)) throw DataError("distance matrix contains non-finite values");
    scale = std::max(scale, std::abs(v));
  }
  const double tol = 1e-9 * std::max(scale, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i * n + i] != 0.0) throw DataError("distance matrix diagonal must be zero");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[i * n + j] < 0.0) throw DataError("distance matrix has negative entries");
      if (std::abs(d[i * n + j] - d[j * n + i]) > tol)
        throw DataError("distance matrix is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
    }
  }
}

}  // namespace

Embedding classical_mds(std::span<const double> distances, std::size_t n, std::size_t dim,
                        Warnings* warnings) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
  if (n < dim + 1)
    throw UsageError("classical MDS in " + std::to_string(dim) + " dimensions needs at least " +
                     std::to_string(dim + 1) + " points");
  validate_matrix(distances, n);

  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd sq(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 0; j < nn; ++j) {
      // symmetrize away representation noise
      const double v = 0.5 * (distances[static_cast<std::size_t>(i * nn + j)] +
                              distances[static_cast<std::size_t>(j * nn + i)]);
      sq(i, j) = v * v;
    }
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(nn, nn) - Eigen::MatrixXd::Constant(nn, nn, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd b = -0.5 * centering * sq * centering;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");

  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const double largest = std::max(std::abs(values(nn - 1)), std::abs(values(0)));
  const double cutoff = kEigenTolerance * std::max(largest, 1.0);

  Embedding e;
  e.dim = dim;
  e.coords.assign(n * dim, 0.0);
  std::size_t positive = 0;
  for (std::size_t axis = 0; axis < dim; ++axis) {
    const Eigen::Index k = nn - 1 - static_cast<Eigen::Index>(axis);
    const double lambda = values(k);
    e.eigenvalues.push_back(lambda);
    if (lambda < 0.0) ++e.zeroed_eigenvalues;
    if (lambda <= cutoff) continue;
    ++positive;
    const double s = std::sqrt(lambda);
    for (std::size_t i = 0; i < n; ++i)
      e.coords[i * dim + axis] = vectors(static_cast<Eigen::Index>(i), k) * s;
  }
  if (positive < dim)
    warn(warnings, "only " + std::to_string(positive) + " positive eigenvalues; embedding has "
                   "reduced rank");

  double coord_scale = 0.0;
  for (std::size_t axis = 0; axis < dim; ++axis) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += e.coords[i * dim + axis];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      e.coords[i * dim + axis] -= mean;
      coord_scale = std::max(coord_scale, std::abs(e.coords[i * dim + axis]));
    }
  }
  for (std::size_t axis = 0; axis < dim; ++axis) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = e.coords[i * dim + axis];
      if (std::abs(v) <= 1e-9 * coord_scale) continue;
      if (v < 0.0)
        for (std::size_t r = 0; r < n; ++r) e.coords[r * dim + axis] = -e.coords[r * dim + axis];
      break;
    }
  }

  e.segment_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.segment_ids[i] = i;
  const auto fitted = embedded_distances(e);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distances[i * n + j];
      num += (d - fitted[i * n + j]) * (d - fitted[i * n + j]);
      den += d * d;
    }
  e.stress = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return e;
}

Embedding classical_mds(const DistanceMatrix& m, std::size_t dim, Warnings* warnings) {
  Embedding e = classical_mds(m.values, m.size(), dim, warnings);
  e.segment_ids = m.segment_ids;
  return e;
}

std::vector<double> embedded_distances(const Embedding& e) {
  const std::size_t n = e.segment_ids.size();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double ss = 0.0;
      for (std::size_t a = 0; a < e.dim; ++a) {
        const double diff = e.at(i, a) - e.at(j, a);
        ss += diff * diff;
      }
      out[i * n + j] = out[j * n + i] = std::sqrt(ss);
    }
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::map<std::size_t, std::string> label_map(std::span<const LabeledSegment> labels) {
  std::map<std::size_t, std::string> out;
  for (const auto& l : labels) out[l.segment_id] = l.label;
  return out;
}

}  // namespace

void write_embedding_csv(std::ostream& out, const Embedding& e,
                         std::span<const LabeledSegment> labels) {
  const auto names = label_map(labels);
  out << "segment_id,x,y" << (labels.empty() ? "" : ",label") << '\n';
  for (std::size_t i = 0; i < e.segment_ids.size(); ++i) {
    out << e.segment_ids[i] << ',' << csv::format_double(e.at(i, 0)) << ','
        << csv::format_double(e.dim > 1 ? e.at(i, 1) : 0.0);
    if (!labels.empty()) {
      auto it = names.find(e.segment_ids[i]);
      out << ',' << csv::escape(it == names.end() ? "" : it->second);
    }
    out << '\n';
  }
}

void write_embedding_svg(std::ostream& out, const Embedding& e,
                         std::span<const LabeledSegment> labels) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                             "#bcbd22", "#17becf"};
  const auto names = label_map(labels);
  std::map<std::string, std::size_t> color_of;
  for (const auto& [id, name] : names) color_of.emplace(name, 0);
  std::size_t next = 0;
  for (auto& [name, c] : color_of) c = next++ % std::size(kPalette);

  constexpr double size = 600.0, margin = 40.0, legend = 140.0;
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (std::size_t i = 0; i < e.segment_ids.size(); ++i) {
    const double x = e.at(i, 0), y = e.dim > 1 ? e.at(i, 1) : 0.0;
    lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  auto sx = [&](double x) { return margin + (x - lo_x) / span * (size - 2 * margin); };
  auto sy = [&](double y) { return size - margin - (y - lo_y) / span * (size - 2 * margin); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + legend << "\" height=\""
      << size << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < e.segment_ids.size(); ++i) {
    auto it = names.find(e.segment_ids[i]);
    const char* fill = it == names.end() ? "#444444" : kPalette[color_of[it->second]];
    out << "<circle cx=\"" << sx(e.at(i, 0)) << "\" cy=\"" << sy(e.dim > 1 ? e.at(i, 1) : 0.0)
        << "\" r=\"5\" fill=\"" << fill << "\" fill-opacity=\"0.8\"><title>segment "
        << e.segment_ids[i] << "</title></circle>\n";
  }
  double ly = margin;
  for (const auto& [name, c] : color_of) {
    out << "<circle cx=\"" << size + 10 << "\" cy=\"" << ly << "\" r=\"5\" fill=\"" << kPalette[c]
        << "\"/><text x=\"" << size + 20 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(name) << "</text>\n";
    ly += 18;
  }
  out << "</svg>\n";
}

}  // namespace wifiseg
