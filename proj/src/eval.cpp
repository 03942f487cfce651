#include "wifiseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "wifiseg/csv.hpp"

namespace wifiseg {

std::vector<LabeledSegment> parse_labels(std::istream& in) {
  csv::Reader reader(in);
  std::vector<LabeledSegment> out;
  auto header = reader.next();
  if (!header) return out;
  const auto& h = header->fields;
  const bool with_xy = h == std::vector<std::string>{"segment_id", "label", "x", "y"};
  if (!with_xy && h != std::vector<std::string>{"segment_id", "label"})
    throw ParseError(header->line_no, "expected header 'segment_id,label,x,y'");
  std::map<std::size_t, std::size_t> seen;
  while (auto row = reader.next()) {
    const auto& f = row->fields;
    if (f.size() != h.size())
      throw ParseError(row->line_no, "expected " + std::to_string(h.size()) + " fields");
    LabeledSegment s;
    const long long id = csv::parse_int(f[0], row->line_no, "segment_id");
    if (id < 0) throw ParseError(row->line_no, "negative segment_id");
    s.segment_id = static_cast<std::size_t>(id);
    s.label = f[1];
    if (s.label.empty()) throw ParseError(row->line_no, "empty label");
    if (with_xy) {
      if (f[2].empty() != f[3].empty())
        throw ParseError(row->line_no, "x and y must both be given or both be empty");
      if (!f[2].empty())
        s.position = Position{csv::parse_double(f[2], row->line_no, "x"),
                              csv::parse_double(f[3], row->line_no, "y")};
    }
    if (!seen.emplace(s.segment_id, row->line_no).second)
      throw ParseError(row->line_no, "duplicate segment_id " + std::to_string(s.segment_id));
    out.push_back(std::move(s));
  }
  return out;
}

void write_labels(std::ostream& out, std::span<const LabeledSegment> labels) {
  out << "segment_id,label,x,y\n";
  for (const auto& s : labels) {
    out << s.segment_id << ',' << csv::escape(s.label) << ',';
    if (s.position) out << csv::format_double(s.position->x) << ',' << csv::format_double(s.position->y);
    else out << ',';
    out << '\n';
  }
}

int classify_pair(double distance, double threshold) { return distance >= threshold ? 1 : 0; }

RocCurve roc_auc(std::span<const double> same, std::span<const double> different) {
  if (same.empty()) throw UsageError("roc_auc: no same-location distances");
  if (different.empty()) throw UsageError("roc_auc: no different-location distances");

  // Mann-Whitney U of the positives over the pooled average ranks.
  std::vector<double> pooled(same.begin(), same.end());
  pooled.insert(pooled.end(), different.begin(), different.end());
  const auto ranks = average_ranks(pooled);
  double rank_sum = 0.0;
  for (std::size_t i = same.size(); i < pooled.size(); ++i) rank_sum += ranks[i];
  const double np = static_cast<double>(different.size());
  const double nn = static_cast<double>(same.size());
  const double u = rank_sum - np * (np + 1.0) / 2.0;

  RocCurve curve;
  curve.auc = u / (np * nn);

  std::vector<double> neg(same.begin(), same.end());
  std::vector<double> pos(different.begin(), different.end());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::vector<double> thresholds = pooled;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t fp = 0, tp = 0;
  for (double tau : thresholds) {
    while (fp < neg.size() && neg[fp] >= tau) ++fp;
    while (tp < pos.size() && pos[tp] >= tau) ++tp;
    curve.points.push_back({tau, static_cast<double>(fp) / nn, static_cast<double>(tp) / np});
  }
  return curve;
}

double curve_area(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return area;
}

namespace {

std::map<std::size_t, const LabeledSegment*> index_labels(std::span<const LabeledSegment> labels) {
  std::map<std::size_t, const LabeledSegment*> out;
  for (const auto& l : labels) out[l.segment_id] = &l;
  return out;
}

}  // namespace

LabeledDistances label_pairs(const DistanceMatrix& m, std::span<const LabeledSegment> labels) {
  const auto by_id = index_labels(labels);
  std::vector<const LabeledSegment*> row_labels;
  std::string missing;
  for (std::size_t id : m.segment_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(id);
      row_labels.push_back(nullptr);
    } else {
      row_labels.push_back(it->second);
    }
  }
  if (!missing.empty()) throw DataError("unlabeled segments: " + missing);

  LabeledDistances out;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      (row_labels[i]->label == row_labels[j]->label ? out.same : out.different).push_back(m(i, j));
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw UsageError("pearson needs two equally long series of at least 2 values");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw NumericError("correlation undefined: zero variance in one of the series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y, Execution exec) {
  if (x.size() != y.size() || x.size() < 2)
    throw UsageError("kendall tau needs two equally long series of at least 2 values");
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  // Integer counts keep the parallel reduction order-independent.
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  auto count_row = [&](std::ptrdiff_t i, long long& c, long long& d, long long& tx, long long& ty) {
    for (std::ptrdiff_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) {
        ++tx;
        ++ty;
      } else if (dx == 0.0) {
        ++tx;
      } else if (dy == 0.0) {
        ++ty;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++c;
      } else {
        ++d;
      }
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : concordant, discordant, ties_x, ties_y)
    for (std::ptrdiff_t i = 0; i < n; ++i) count_row(i, concordant, discordant, ties_x, ties_y);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) count_row(i, concordant, discordant, ties_x, ties_y);
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double denom = std::sqrt((pairs - static_cast<double>(ties_x)) *
                                 (pairs - static_cast<double>(ties_y)));
  if (denom == 0.0) throw NumericError("kendall tau undefined: one series is constant");
  return std::clamp(static_cast<double>(concordant - discordant) / denom, -1.0, 1.0);
}

CorrelationReport correlate(std::span<const double> computed, std::span<const double> reference,
                            Execution exec) {
  CorrelationReport r;
  r.n_pairs = computed.size();
  r.pearson = pearson(computed, reference);
  r.spearman = spearman(computed, reference);
  r.kendall_tau = kendall_tau_b(computed, reference, exec);
  return r;
}

CorrelationReport correlations(const DistanceMatrix& m, std::span<const LabeledSegment> labels,
                               Execution exec) {
  const auto by_id = index_labels(labels);
  std::vector<std::size_t> rows;
  std::vector<Position> pos;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto it = by_id.find(m.segment_ids[i]);
    if (it == by_id.end() || !it->second->position) continue;
    rows.push_back(i);
    pos.push_back(*it->second->position);
  }
  if (rows.size() < 2) throw DataError("correlations need at least two segments with positions");
  std::vector<double> computed, floorplan;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      computed.push_back(m(rows[a], rows[b]));
      floorplan.push_back(std::hypot(pos[a].x - pos[b].x, pos[a].y - pos[b].y));
    }
  if (computed.size() < 2) throw DataError("correlations need at least two segment pairs");
  return correlate(computed, floorplan, exec);
}

}  // namespace wifiseg
