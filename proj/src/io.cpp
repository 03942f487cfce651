#include "wifiseg/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wifiseg/csv.hpp"

namespace wifiseg::io {

using nlohmann::json;

void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  try {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_segments(std::ostream& out, std::span<const WifiSegment> segs) {
  out << "segment_id,device,start_ms,end_ms,n_observations\n";
  for (const auto& s : segs)
    out << s.segment_id << ',' << csv::escape(s.device) << ',' << s.start << ',' << s.end << ','
        << s.observations.size() << '\n';
}

std::vector<SegmentRow> read_segments(std::istream& in) {
  csv::Reader reader(in);
  std::vector<SegmentRow> out;
  auto header = reader.next();
  if (!header) return out;
  if (header->fields !=
      std::vector<std::string>{"segment_id", "device", "start_ms", "end_ms", "n_observations"})
    throw ParseError(header->line_no, "unexpected segment list header");
  while (auto row = reader.next()) {
    const auto& f = row->fields;
    if (f.size() != 5) throw ParseError(row->line_no, "expected 5 fields");
    out.push_back({static_cast<std::size_t>(csv::parse_int(f[0], row->line_no, "segment_id")), f[1],
                   csv::parse_int(f[2], row->line_no, "start_ms"),
                   csv::parse_int(f[3], row->line_no, "end_ms"),
                   static_cast<std::size_t>(csv::parse_int(f[4], row->line_no, "n_observations"))});
  }
  return out;
}

void write_boundaries(std::ostream& out, const MotionSegmentation& seg) {
  out << "index,timestamp_ms,parity\n";
  for (std::size_t i = 0; i < seg.boundaries.size(); ++i)
    out << i << ',' << seg.boundaries[i] << ',' << (i % 2 == 0 ? "stationary" : "moving") << '\n';
}

json to_json(const EstimatorOptions& o) {
  return {{"bandwidth", o.bandwidth},
          {"laplace_epsilon", o.laplace_epsilon},
          {"sigma_min2", o.sigma_min2},
          {"invisibility", o.invisibility}};
}

EstimatorOptions estimator_options_from_json(const json& j) {
  EstimatorOptions o;
  o.bandwidth = j.value("bandwidth", o.bandwidth);
  o.laplace_epsilon = j.value("laplace_epsilon", o.laplace_epsilon);
  o.sigma_min2 = j.value("sigma_min2", o.sigma_min2);
  o.invisibility = j.value("invisibility", o.invisibility);
  return o;
}

json to_json(const EvaluationGrid& g) { return {{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}}; }

EvaluationGrid grid_from_json(const json& j) {
  EvaluationGrid g;
  g.lo = j.value("lo", g.lo);
  g.hi = j.value("hi", g.hi);
  g.step = j.value("step", g.step);
  g.validate();
  return g;
}

json to_json(const SegmentFingerprint& fp) {
  json aps = json::object();
  for (const auto& [bssid, l] : fp.per_ap) {
    json entry = {{"source_count", l.source_count()}};
    if (const auto* p = std::get_if<Pmf>(&l.payload())) {
      json mass = json::object();
      for (std::size_t i = 0; i < kSupportSize; ++i)
        if (p->mass[i] != 0.0) mass[std::to_string(kRssiMin + static_cast<int>(i))] = p->mass[i];
      entry["pmf"] = std::move(mass);
      entry["laplace_epsilon"] = p->laplace_epsilon;
    } else if (const auto* n = std::get_if<Normal>(&l.payload())) {
      entry["mu"] = n->mu;
      entry["sigma2"] = n->sigma2;
    } else {
      const auto& k = std::get<Kde>(l.payload());
      entry["samples"] = k.samples;
      entry["h"] = k.bandwidth;
    }
    aps[bssid] = std::move(entry);
  }
  return {{"segment_id", fp.segment_id},
          {"device", fp.device},
          {"method", std::string(to_string(fp.method))},
          {"options", to_json(fp.options)},
          {"aps", std::move(aps)}};
}

SegmentFingerprint fingerprint_from_json(const json& j) {
  try {
    SegmentFingerprint fp;
    fp.segment_id = j.at("segment_id").get<std::size_t>();
    fp.device = j.value("device", std::string{});
    fp.method = estimator_from_string(j.at("method").get<std::string>());
    fp.options = estimator_options_from_json(j.at("options"));
    for (const auto& [bssid, e] : j.at("aps").items()) {
      const auto count = e.value("source_count", std::size_t{0});
      switch (fp.method) {
        case Estimator::Pmf: {
          Pmf p;
          p.laplace_epsilon = e.value("laplace_epsilon", 0.0);
          for (const auto& [key, v] : e.at("pmf").items()) {
            const int r = std::stoi(key);
            if (r < kRssiMin || r > kRssiMax) throw DataError("PMF support value out of range");
            p.mass[static_cast<std::size_t>(r - kRssiMin)] = v.get<double>();
          }
          fp.per_ap.emplace(bssid, UnivariateLikelihood(p, count));
          break;
        }
        case Estimator::Normal:
          fp.per_ap.emplace(bssid, UnivariateLikelihood(
                                       Normal{e.at("mu").get<double>(), e.at("sigma2").get<double>()},
                                       count));
          break;
        case Estimator::Kde: {
          Kde k{e.at("samples").get<std::vector<double>>(), e.at("h").get<double>()};
          if (k.samples.empty() || !(k.bandwidth > 0.0)) throw DataError("invalid KDE payload");
          fp.per_ap.emplace(bssid, UnivariateLikelihood(std::move(k), count));
          break;
        }
      }
    }
    return fp;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid fingerprint record: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw DataError("invalid PMF support key in fingerprint record");
  }
}

void write_fingerprints(std::ostream& out, std::span<const SegmentFingerprint> fps) {
  for (const auto& fp : fps) out << to_json(fp).dump() << '\n';
}

std::vector<SegmentFingerprint> read_fingerprints(std::istream& in) {
  std::vector<SegmentFingerprint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    out.push_back(fingerprint_from_json(j));
  }
  return out;
}

json matrix_metadata(const DistanceMatrix& m) {
  return {{"n", m.size()},
          {"segment_ids", m.segment_ids},
          {"measure", std::string(to_string(m.measure))},
          {"norm", std::string(to_string(m.norm))},
          {"estimator", std::string(to_string(m.estimator))},
          {"estimator_options", to_json(m.estimator_options)},
          {"grid", to_json(m.measure_options.grid)},
          {"bhattacharyya_cap", m.measure_options.bhattacharyya_cap},
          {"density_floor", m.measure_options.density_floor},
          {"capped_entries", m.capped_entries},
          {"layout", "row-major float64 little-endian"}};
}

void write_matrix_csv(std::ostream& out, const DistanceMatrix& m) {
  out << "segment_id";
  for (auto id : m.segment_ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.segment_ids[i];
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << csv::format_double(m(i, j));
    out << '\n';
  }
}

void write_matrix_binary(std::ostream& out, const DistanceMatrix& m) {
  for (double v : m.values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

DistanceMatrix read_matrix(std::istream& binary, const json& meta) {
  try {
    DistanceMatrix m;
    m.segment_ids = meta.at("segment_ids").get<std::vector<std::size_t>>();
    m.measure = measure_from_string(meta.at("measure").get<std::string>());
    m.norm = norm_from_string(meta.at("norm").get<std::string>());
    m.estimator = estimator_from_string(meta.at("estimator").get<std::string>());
    m.estimator_options = estimator_options_from_json(meta.at("estimator_options"));
    m.measure_options.grid = grid_from_json(meta.at("grid"));
    m.measure_options.bhattacharyya_cap = meta.value("bhattacharyya_cap", 50.0);
    m.measure_options.density_floor = meta.value("density_floor", 1e-300);
    m.capped_entries = meta.value("capped_entries", std::size_t{0});
    const std::size_t n = m.segment_ids.size();
    m.values.resize(n * n);
    for (double& v : m.values) {
      unsigned char bytes[8];
      if (!binary.read(reinterpret_cast<char*>(bytes), 8))
        throw DataError("distance matrix binary is truncated");
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
      v = std::bit_cast<double>(bits);
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid distance matrix metadata: ") + e.what());
  }
}

DistanceMatrix read_matrix_csv(std::istream& in) {
  csv::Reader reader(in);
  DistanceMatrix m;
  auto header = reader.next();
  if (!header || header->fields.empty() || header->fields[0] != "segment_id")
    throw DataError("distance matrix CSV must start with a segment_id header");
  for (std::size_t j = 1; j < header->fields.size(); ++j)
    m.segment_ids.push_back(
        static_cast<std::size_t>(csv::parse_int(header->fields[j], header->line_no, "segment_id")));
  const std::size_t n = m.segment_ids.size();
  while (auto row = reader.next()) {
    if (row->fields.size() != n + 1) throw ParseError(row->line_no, "matrix row has wrong width");
    for (std::size_t j = 1; j <= n; ++j)
      m.values.push_back(csv::parse_double(row->fields[j], row->line_no, "distance"));
  }
  if (m.values.size() != n * n) throw DataError("distance matrix CSV is not square");
  return m;
}

void write_roc(std::ostream& out, const RocCurve& curve) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : curve.points)
    out << csv::format_double(p.threshold) << ',' << csv::format_double(p.fpr) << ','
        << csv::format_double(p.tpr) << '\n';
}

}  // namespace wifiseg::io
