#include "wifiseg/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "wifiseg/csv.hpp"
#include "wifiseg/io.hpp"

#ifndef WIFISEG_VERSION
#define WIFISEG_VERSION "0.0.0"
#endif

namespace wifiseg {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

EstimatorOptions PipelineConfig::estimator_options(Estimator e, Measure m,
                                                   bool with_invisibility) const {
  EstimatorOptions o;
  o.bandwidth = bandwidth;
  o.sigma_min2 = sigma_min2;
  o.invisibility = with_invisibility;
  o.laplace_epsilon = e == Estimator::Pmf && requires_positive_mass(m) ? laplace_epsilon : 0.0;
  return o;
}

namespace {

std::string_view to_string(WindowStatistic s) {
  return s == WindowStatistic::Energy ? "energy" : "variance";
}

WindowStatistic statistic_from_string(std::string_view s) {
  if (s == "energy") return WindowStatistic::Energy;
  if (s == "variance") return WindowStatistic::Variance;
  throw UsageError("unknown window statistic '" + std::string(s) + "'");
}

std::string_view to_string(Grouping g) { return g == Grouping::Segment ? "segment" : "room-day"; }

Grouping grouping_from_string(std::string_view s) {
  if (s == "segment") return Grouping::Segment;
  if (s == "room-day" || s == "room_day") return Grouping::RoomDay;
  throw UsageError("unknown grouping '" + std::string(s) + "' (expected segment or room-day)");
}

template <class T, class F>
std::vector<T> list_from_json(const json& j, F&& parse) {
  std::vector<T> out;
  if (j.is_string()) {
    out.push_back(parse(j.get<std::string>()));
  } else {
    for (const auto& v : j) out.push_back(parse(v.get<std::string>()));
  }
  if (out.empty()) throw UsageError("empty list in configuration");
  return out;
}

template <class T, class F>
json list_to_json(const std::vector<T>& v, F&& name) {
  json out = json::array();
  for (const auto& x : v) out.push_back(std::string(name(x)));
  return out;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw UsageError(std::string("unknown configuration key '") + key + "' in " + where);
  }
}

}  // namespace

PipelineConfig config_from_json(const json& j, PipelineConfig cfg) {
  if (!j.is_object()) throw UsageError("configuration must be a JSON object");
  reject_unknown(j,
                 {"wifi", "accel", "blacklist", "labels", "scene", "device", "window",
                  "min_duration", "scan_epsilon", "estimator", "bandwidth", "laplace_epsilon",
                  "sigma_min2", "invisibility", "measures", "norms", "grid", "bhattacharyya_cap",
                  "density_floor", "grouping", "mds_dim", "sweep", "seed", "output_dir", "jobs"},
                 "top level");
  try {
    auto path = [&](const char* key, fs::path& field) {
      if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    path("wifi", cfg.wifi);
    path("accel", cfg.accel);
    path("blacklist", cfg.blacklist);
    path("labels", cfg.labels);
    path("scene", cfg.scene);
    path("output_dir", cfg.output_dir);
    cfg.device = j.value("device", cfg.device);
    if (j.contains("window")) {
      const auto& w = j.at("window");
      reject_unknown(w, {"window_len", "hop", "statistic", "threshold",
                         "assume_stationary_when_no_accel"}, "window");
      cfg.window.window_len = w.value("window_len", cfg.window.window_len);
      cfg.window.hop = w.value("hop", cfg.window.hop);
      if (w.contains("statistic"))
        cfg.window.statistic = statistic_from_string(w.at("statistic").get<std::string>());
      cfg.window.threshold = w.value("threshold", cfg.window.threshold);
      cfg.window.assume_stationary_when_no_accel =
          w.value("assume_stationary_when_no_accel", cfg.window.assume_stationary_when_no_accel);
    }
    cfg.min_duration = j.value("min_duration", cfg.min_duration);
    cfg.scan_epsilon = j.value("scan_epsilon", cfg.scan_epsilon);
    if (j.contains("estimator")) cfg.estimator = estimator_from_string(j.at("estimator").get<std::string>());
    cfg.bandwidth = j.value("bandwidth", cfg.bandwidth);
    cfg.laplace_epsilon = j.value("laplace_epsilon", cfg.laplace_epsilon);
    cfg.sigma_min2 = j.value("sigma_min2", cfg.sigma_min2);
    cfg.invisibility = j.value("invisibility", cfg.invisibility);
    if (j.contains("measures"))
      cfg.measures = list_from_json<Measure>(j.at("measures"), measure_from_string);
    if (j.contains("norms")) cfg.norms = list_from_json<Norm>(j.at("norms"), norm_from_string);
    if (j.contains("grid")) cfg.measure_options.grid = io::grid_from_json(j.at("grid"));
    cfg.measure_options.bhattacharyya_cap =
        j.value("bhattacharyya_cap", cfg.measure_options.bhattacharyya_cap);
    cfg.measure_options.density_floor = j.value("density_floor", cfg.measure_options.density_floor);
    if (j.contains("grouping")) cfg.grouping = grouping_from_string(j.at("grouping").get<std::string>());
    cfg.mds_dim = j.value("mds_dim", cfg.mds_dim);
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      reject_unknown(s, {"estimators", "measures", "norms", "invisibility"}, "sweep");
      if (s.contains("estimators"))
        cfg.sweep_estimators = list_from_json<Estimator>(s.at("estimators"), estimator_from_string);
      if (s.contains("measures"))
        cfg.sweep_measures = list_from_json<Measure>(s.at("measures"), measure_from_string);
      if (s.contains("norms")) cfg.sweep_norms = list_from_json<Norm>(s.at("norms"), norm_from_string);
      if (s.contains("invisibility")) {
        cfg.sweep_invisibility.clear();
        for (const auto& v : s.at("invisibility")) cfg.sweep_invisibility.push_back(v.get<bool>());
      }
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void PipelineConfig::validate() const {
  window.validate();
  measure_options.grid.validate();
  if (min_duration < 0) throw UsageError("min_duration must be non-negative");
  if (scan_epsilon < 0) throw UsageError("scan_epsilon must be non-negative");
  if (!(bandwidth > 0.0)) throw UsageError("bandwidth must be positive");
  if (!(laplace_epsilon >= 0.0)) throw UsageError("laplace_epsilon must be non-negative");
  if (!(sigma_min2 > 0.0)) throw UsageError("sigma_min2 must be positive");
  if (!(measure_options.bhattacharyya_cap > 0.0)) throw UsageError("bhattacharyya_cap must be positive");
  if (!(measure_options.density_floor > 0.0)) throw UsageError("density_floor must be positive");
  if (mds_dim == 0) throw UsageError("mds_dim must be at least 1");
  if (measures.empty() || norms.empty()) throw UsageError("at least one measure and norm required");
  for (const auto* list : {&measures, &sweep_measures})
    for (Measure m : *list)
      if (!is_aggregatable(m))
        throw UsageError("measure '" + std::string(to_string(m)) +
                         "' cannot build a distance matrix");
  if (sweep_estimators.empty() || sweep_measures.empty() || sweep_norms.empty() ||
      sweep_invisibility.empty())
    throw UsageError("sweep lists must not be empty");
}

json to_json(const PipelineConfig& cfg) {
  auto name = [](auto v) { return to_string(v); };
  json invis = json::array();
  for (bool b : cfg.sweep_invisibility) invis.push_back(b);
  return {{"wifi", cfg.wifi.string()},
          {"accel", cfg.accel.string()},
          {"blacklist", cfg.blacklist.string()},
          {"labels", cfg.labels.string()},
          {"scene", cfg.scene.string()},
          {"device", cfg.device},
          {"window",
           {{"window_len", cfg.window.window_len},
            {"hop", cfg.window.hop},
            {"statistic", std::string(to_string(cfg.window.statistic))},
            {"threshold", cfg.window.threshold},
            {"assume_stationary_when_no_accel", cfg.window.assume_stationary_when_no_accel}}},
          {"min_duration", cfg.min_duration},
          {"scan_epsilon", cfg.scan_epsilon},
          {"estimator", std::string(to_string(cfg.estimator))},
          {"bandwidth", cfg.bandwidth},
          {"laplace_epsilon", cfg.laplace_epsilon},
          {"sigma_min2", cfg.sigma_min2},
          {"invisibility", cfg.invisibility},
          {"measures", list_to_json(cfg.measures, name)},
          {"norms", list_to_json(cfg.norms, name)},
          {"grid", io::to_json(cfg.measure_options.grid)},
          {"bhattacharyya_cap", cfg.measure_options.bhattacharyya_cap},
          {"density_floor", cfg.measure_options.density_floor},
          {"grouping", std::string(to_string(cfg.grouping))},
          {"mds_dim", cfg.mds_dim},
          {"sweep",
           {{"estimators", list_to_json(cfg.sweep_estimators, name)},
            {"measures", list_to_json(cfg.sweep_measures, name)},
            {"norms", list_to_json(cfg.sweep_norms, name)},
            {"invisibility", invis}}},
          {"seed", cfg.seed},
          {"output_dir", cfg.output_dir.string()},
          {"jobs", cfg.jobs}};
}

std::string config_hash(const PipelineConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("jobs");
  return io::fnv1a_hex(j.dump());
}

// ---------------------------------------------------------------- stages

namespace {

std::ifstream open_input(const fs::path& p, const char* what) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " file " + p.string());
  return in;
}

}  // namespace

PreparedInputs prepare_inputs(const PipelineConfig& cfg) {
  PreparedInputs in;
  if (cfg.wifi.empty()) {
    SyntheticSceneConfig scene_cfg = SyntheticSceneConfig::defaults();
    if (!cfg.scene.empty()) scene_cfg = scene_config_from_json(json::parse(io::read_file(cfg.scene)));
    scene_cfg.seed = cfg.seed;
    SyntheticScene scene = generate_synthetic_scene(scene_cfg, &in.warnings);
    in.synthetic = true;
    in.device = scene_cfg.device;
    in.wifi = std::move(scene.wifi);
    in.accel = std::move(scene.accel);
    in.truth_labels = std::move(scene.labels);
    in.truth_spans = std::move(scene.segment_spans);
  } else {
    auto wifi_in = open_input(cfg.wifi, "WiFi");
    WifiDataset all = parse_wifi_records(wifi_in, format_from_path(cfg.wifi.string()));
    if (!cfg.blacklist.empty()) {
      auto bl_in = open_input(cfg.blacklist, "blacklist");
      all = filter_mobile_aps(all, Blacklist::parse(bl_in));
    }
    in.device = cfg.device;
    if (in.device.empty()) {
      const auto devices = all.devices();
      if (devices.size() != 1)
        throw UsageError("input holds " + std::to_string(devices.size()) +
                         " devices; choose one with --device");
      in.device = *devices.begin();
    }
    in.wifi = restrict_device(all, in.device, &in.warnings);
    if (!cfg.accel.empty()) {
      auto accel_in = open_input(cfg.accel, "acceleration");
      in.accel = restrict_device(parse_accel_records(accel_in, format_from_path(cfg.accel.string())),
                                 in.device);
    }
  }
  if (!cfg.labels.empty()) {
    auto labels_in = open_input(cfg.labels, "labels");
    in.labels = parse_labels(labels_in);
  }
  in.augmented = augment_ap_invisibility(in.wifi, cfg.scan_epsilon);
  return in;
}

SegmentationResult run_segmentation(const PreparedInputs& in, const PipelineConfig& cfg) {
  cfg.validate();
  SegmentationResult r;
  std::optional<std::pair<Timestamp, Timestamp>> span;
  if (!in.wifi.empty())
    span = std::pair{in.wifi.observations().front().timestamp,
                     in.wifi.observations().back().timestamp};
  r.motion = segment_motion(in.accel, cfg.window, span);
  r.segments = extract_stationary_segments(in.wifi, r.motion, cfg.min_duration);
  return r;
}

std::vector<LabeledSegment> resolve_labels(const PreparedInputs& in,
                                           std::span<const WifiSegment> segs) {
  if (!in.synthetic) return in.labels;
  std::vector<LabeledSegment> out;
  for (const auto& s : segs) {
    const Timestamp mid = s.start + (s.end - s.start) / 2;
    for (std::size_t k = 0; k < in.truth_spans.size(); ++k) {
      if (mid >= in.truth_spans[k].first && mid < in.truth_spans[k].second) {
        LabeledSegment l = in.truth_labels[k];
        l.segment_id = s.segment_id;
        out.push_back(std::move(l));
        break;
      }
    }
  }
  return out;
}

std::vector<WifiSegment> segments_for_fingerprinting(const PreparedInputs& in,
                                                     std::span<const WifiSegment> segs,
                                                     bool invisibility) {
  std::vector<WifiSegment> out(segs.begin(), segs.end());
  if (!invisibility) return out;
  const auto& obs = in.augmented.observations();
  for (auto& s : out) {
    auto lo = std::lower_bound(obs.begin(), obs.end(), s.start,
                               [](const WifiObservation& o, Timestamp t) { return o.timestamp < t; });
    auto hi = std::lower_bound(obs.begin(), obs.end(), s.end,
                               [](const WifiObservation& o, Timestamp t) { return o.timestamp < t; });
    s.observations.assign(lo, hi);
  }
  return out;
}

std::vector<WifiSegment> pool_room_days(std::span<const WifiSegment> segs,
                                        std::span<const LabeledSegment> labels) {
  constexpr Timestamp kDay = 86'400'000;
  std::map<std::size_t, std::string> label_of;
  for (const auto& l : labels) label_of[l.segment_id] = l.label;
  std::map<std::pair<std::string, Timestamp>, std::size_t> group_index;
  std::vector<WifiSegment> out;
  for (const auto& s : segs) {
    auto it = label_of.find(s.segment_id);
    if (it == label_of.end()) {
      out.push_back(s);
      continue;
    }
    const Timestamp day = s.start >= 0 ? s.start / kDay : (s.start - kDay + 1) / kDay;
    auto [g, fresh] = group_index.try_emplace({it->second, day}, out.size());
    if (fresh) {
      out.push_back(s);
      continue;
    }
    WifiSegment& pooled = out[g->second];
    pooled.start = std::min(pooled.start, s.start);
    pooled.end = std::max(pooled.end, s.end);
    pooled.observations.insert(pooled.observations.end(), s.observations.begin(),
                               s.observations.end());
  }
  return out;
}

std::vector<SegmentFingerprint> build_fingerprints(const PreparedInputs& in,
                                                   std::span<const WifiSegment> segs,
                                                   Estimator e, const EstimatorOptions& opts,
                                                   const PipelineConfig& cfg) {
  std::vector<WifiSegment> cut = segments_for_fingerprinting(in, segs, opts.invisibility);
  if (cfg.grouping == Grouping::RoomDay) cut = pool_room_days(cut, resolve_labels(in, segs));
  return fingerprint_segments(cut, in.wifi.ap_universe(), e, opts);
}

EvaluationResult evaluate_matrix(const DistanceMatrix& m, std::span<const LabeledSegment> labels) {
  EvaluationResult r;
  const LabeledDistances pairs = label_pairs(m, labels);
  r.same_pairs = pairs.same.size();
  r.different_pairs = pairs.different.size();
  r.roc = roc_auc(pairs.same, pairs.different);
  bool any_position = false;
  for (const auto& l : labels) any_position = any_position || l.position.has_value();
  if (any_position) {
    try {
      r.correlation = correlations(m, labels);
    } catch (const Error& e) {
      r.correlation_error = e.what();
    }
  }
  return r;
}

// ---------------------------------------------------------------- sweep

std::string sweep_header() { return "estimator,measure,norm,invisibility,auc,pearson,spearman,kendall"; }

std::string format_sweep_row(const SweepRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string{}; };
  std::ostringstream out;
  out << to_string(row.estimator) << ',' << to_string(row.measure) << ',' << to_string(row.norm)
      << ',' << (row.invisibility ? "true" : "false") << ',' << csv::format_double(row.auc) << ','
      << opt(row.pearson) << ',' << opt(row.spearman) << ',' << opt(row.kendall);
  return out.str();
}

std::vector<SweepRow> run_sweep(const PipelineConfig& cfg,
                                const std::function<void(const SweepRow&)>& on_row,
                                const std::function<bool(const SweepRow&)>& skip) {
  const PreparedInputs in = prepare_inputs(cfg);
  const SegmentationResult seg = run_segmentation(in, cfg);
  if (seg.segments.size() < 2) throw DataError("fewer than two stationary segments found");
  const auto labels = resolve_labels(in, seg.segments);

  std::map<std::tuple<Estimator, bool, double>, std::vector<SegmentFingerprint>> cache;
  std::vector<SweepRow> rows;
  for (Estimator e : cfg.sweep_estimators)
    for (Measure m : cfg.sweep_measures)
      for (Norm n : cfg.sweep_norms)
        for (bool inv : cfg.sweep_invisibility) {
          SweepRow row{e, m, n, inv};
          if (skip && skip(row)) continue;
          const EstimatorOptions opts = cfg.estimator_options(e, m, inv);
          auto key = std::tuple{e, inv, opts.laplace_epsilon};
          auto it = cache.find(key);
          if (it == cache.end())
            it = cache.emplace(key, build_fingerprints(in, seg.segments, e, opts, cfg)).first;
          const DistanceMatrix matrix = pairwise_matrix(it->second, m, n, cfg.measure_options);
          const EvaluationResult ev = evaluate_matrix(matrix, labels);
          row.auc = ev.roc.auc;
          if (ev.correlation) {
            row.pearson = ev.correlation->pearson;
            row.spearman = ev.correlation->spearman;
            row.kendall = ev.correlation->kendall_tau;
          }
          rows.push_back(row);
          if (on_row) on_row(row);
        }
  return rows;
}

// ---------------------------------------------------------------- commands

namespace {

using Clock = std::chrono::steady_clock;

class Run {
 public:
  Run(const PipelineConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)), hash_(config_hash(cfg)), start_(Clock::now()) {
    if (cfg_.output_dir.empty()) throw UsageError("no output directory configured");
    fs::create_directories(cfg_.output_dir);
  }

  const std::string& hash() const { return hash_; }
  fs::path path(const std::string& name) const { return cfg_.output_dir / name; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& writer) {
    io::write_atomically(path(name), writer);
    artifacts_.push_back(name);
  }

  void write_json(const std::string& name, json j) {
    j["config_hash"] = hash_;
    write(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }

  void lap(const std::string& stage) {
    const auto now = Clock::now();
    timings_[stage] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

  void add_warnings(const Warnings& w) { warnings_.insert(warnings_.end(), w.begin(), w.end()); }

  json finish(json extra = json::object()) {
    json manifest = {
        {"command", command_},
        {"version", WIFISEG_VERSION},
        {"config_hash", hash_},
        {"config", to_json(cfg_)},
        {"artifacts", artifacts_},
        {"warnings", warnings_},
        {"timings_s", timings_},
        {"elapsed_s", std::chrono::duration<double>(Clock::now() - start_).count()},
        {"finished_at_unix_ms",
         std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
             .count()},
    };
    for (auto& [k, v] : extra.items()) manifest[k] = v;
    io::write_atomically(path("manifest-" + command_ + ".json"),
                         [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
    return manifest;
  }

 private:
  const PipelineConfig& cfg_;
  std::string command_;
  std::string hash_;
  Clock::time_point start_;
  Clock::time_point last_ = Clock::now();
  std::vector<std::string> artifacts_;
  Warnings warnings_;
  std::map<std::string, double> timings_;
};

std::string combo_name(Measure m, Norm n) {
  return std::string(to_string(m)) + "-" + std::string(to_string(n));
}

void write_fingerprint_file(Run& run, std::span<const SegmentFingerprint> fps) {
  run.write("fingerprints.jsonl", [&](std::ostream& out) {
    for (const auto& fp : fps) {
      json j = io::to_json(fp);
      j["config_hash"] = run.hash();
      out << j.dump() << '\n';
    }
  });
}

// Fingerprints from the output directory when they match the requested
// options and config, otherwise rebuilt in-process.
std::vector<SegmentFingerprint> fingerprints_for(Run& run, const PipelineConfig& cfg,
                                                 const PreparedInputs& in,
                                                 const SegmentationResult& seg,
                                                 const EstimatorOptions& opts) {
  const fs::path file = run.path("fingerprints.jsonl");
  if (fs::exists(file)) {
    std::ifstream f(file);
    std::string line;
    bool same_config = true;
    while (std::getline(f, line))
      if (!line.empty() && json::parse(line).value("config_hash", std::string{}) != run.hash())
        same_config = false;
    if (same_config) {
      std::ifstream again(file);
      auto fps = io::read_fingerprints(again);
      if (!fps.empty() && fps.front().method == cfg.estimator && fps.front().options == opts)
        return fps;
    }
  }
  return build_fingerprints(in, seg.segments, cfg.estimator, opts, cfg);
}

void write_matrix_files(Run& run, const DistanceMatrix& m) {
  const std::string stem = "distances-" + combo_name(m.measure, m.norm);
  run.write(stem + ".csv", [&](std::ostream& out) { io::write_matrix_csv(out, m); });
  run.write(stem + ".bin", [&](std::ostream& out) { io::write_matrix_binary(out, m); });
  run.write_json(stem + ".json", io::matrix_metadata(m));
}

struct Staged {
  PreparedInputs in;
  SegmentationResult seg;
  std::vector<LabeledSegment> labels;
};

Staged stage_inputs(Run& run, const PipelineConfig& cfg) {
  Staged s{prepare_inputs(cfg), {}, {}};
  run.add_warnings(s.in.warnings);
  run.lap("ingest");
  s.seg = run_segmentation(s.in, cfg);
  // Pooled room-day fingerprints keep their smallest member id, so these
  // labels apply to both groupings.
  s.labels = resolve_labels(s.in, s.seg.segments);
  run.lap("segment");
  return s;
}

std::vector<DistanceMatrix> matrices_for(Run& run, const PipelineConfig& cfg, const Staged& s,
                                         bool load_existing) {
  std::vector<DistanceMatrix> out;
  for (Measure m : cfg.measures)
    for (Norm n : cfg.norms) {
      const std::string stem = "distances-" + combo_name(m, n);
      if (load_existing && fs::exists(run.path(stem + ".json")) && fs::exists(run.path(stem + ".bin"))) {
        json meta = json::parse(io::read_file(run.path(stem + ".json")));
        if (meta.value("config_hash", std::string{}) == run.hash()) {
          std::ifstream bin(run.path(stem + ".bin"), std::ios::binary);
          out.push_back(io::read_matrix(bin, meta));
          continue;
        }
      }
      const auto opts = cfg.estimator_options(cfg.estimator, m, cfg.invisibility);
      const auto fps = fingerprints_for(run, cfg, s.in, s.seg, opts);
      out.push_back(pairwise_matrix(fps, m, n, cfg.measure_options));
    }
  return out;
}

}  // namespace

json command_simulate(const PipelineConfig& cfg) {
  Run run(cfg, "simulate");
  SyntheticSceneConfig scene_cfg = SyntheticSceneConfig::defaults();
  if (!cfg.scene.empty()) scene_cfg = scene_config_from_json(json::parse(io::read_file(cfg.scene)));
  scene_cfg.seed = cfg.seed;
  Warnings warnings;
  const SyntheticScene scene = generate_synthetic_scene(scene_cfg, &warnings);
  run.add_warnings(warnings);
  run.lap("generate");
  run.write("wifi.csv", [&](std::ostream& out) { write_wifi_records(out, scene.wifi, RecordFormat::Csv); });
  run.write("accel.csv", [&](std::ostream& out) { write_accel_records(out, scene.accel, RecordFormat::Csv); });
  run.write("labels.csv", [&](std::ostream& out) { write_labels(out, scene.labels); });
  run.write_json("scene.json", to_json(scene_cfg));
  run.lap("write");
  return run.finish({{"observations", scene.wifi.size()}, {"segments", scene.labels.size()}});
}

json command_segment(const PipelineConfig& cfg) {
  Run run(cfg, "segment");
  Staged s = stage_inputs(run, cfg);
  run.write("segments.csv", [&](std::ostream& out) { io::write_segments(out, s.seg.segments); });
  run.write("boundaries.csv", [&](std::ostream& out) { io::write_boundaries(out, s.seg.motion); });
  if (s.in.synthetic)
    run.write("segment-labels.csv", [&](std::ostream& out) { write_labels(out, s.labels); });
  json extra = {{"segments", s.seg.segments.size()},
                {"carried_windows", s.seg.motion.carried_windows},
                {"device", s.in.device}};
  if (s.seg.motion.carried_windows > 0)
    run.add_warnings({std::to_string(s.seg.motion.carried_windows) +
                      " acceleration windows had fewer than 3 samples and carried the previous label"});
  return run.finish(extra);
}

json command_fingerprint(const PipelineConfig& cfg) {
  Run run(cfg, "fingerprint");
  Staged s = stage_inputs(run, cfg);
  const Measure first = cfg.measures.empty() ? Measure::EarthMovers : cfg.measures.front();
  const auto opts = cfg.estimator_options(cfg.estimator, first, cfg.invisibility);
  const auto fps = build_fingerprints(s.in, s.seg.segments, cfg.estimator, opts, cfg);
  run.lap("fingerprint");
  write_fingerprint_file(run, fps);
  return run.finish({{"fingerprints", fps.size()}});
}

json command_distances(const PipelineConfig& cfg) {
  Run run(cfg, "distances");
  Staged s = stage_inputs(run, cfg);
  const auto matrices = matrices_for(run, cfg, s, false);
  run.lap("distances");
  json capped = json::object();
  for (const auto& m : matrices) {
    write_matrix_files(run, m);
    capped[combo_name(m.measure, m.norm)] = m.capped_entries;
  }
  return run.finish({{"capped_entries", capped}});
}

json command_evaluate(const PipelineConfig& cfg) {
  Run run(cfg, "evaluate");
  Staged s = stage_inputs(run, cfg);
  if (s.labels.empty()) throw UsageError("evaluate needs ground-truth labels (--labels)");
  const auto matrices = matrices_for(run, cfg, s, true);
  run.lap("distances");
  json report = json::array();
  for (const auto& m : matrices) {
    const EvaluationResult ev = evaluate_matrix(m, s.labels);
    run.write("roc-" + combo_name(m.measure, m.norm) + ".csv",
              [&](std::ostream& out) { io::write_roc(out, ev.roc); });
    json entry = {{"measure", std::string(to_string(m.measure))},
                  {"norm", std::string(to_string(m.norm))},
                  {"estimator", std::string(to_string(m.estimator))},
                  {"invisibility", m.estimator_options.invisibility},
                  {"auc", ev.roc.auc},
                  {"same_pairs", ev.same_pairs},
                  {"different_pairs", ev.different_pairs}};
    if (ev.correlation)
      entry["correlation"] = {{"pearson", ev.correlation->pearson},
                              {"spearman", ev.correlation->spearman},
                              {"kendall_tau", ev.correlation->kendall_tau},
                              {"n_pairs", ev.correlation->n_pairs}};
    if (!ev.correlation_error.empty()) entry["correlation_error"] = ev.correlation_error;
    report.push_back(std::move(entry));
  }
  run.lap("evaluate");
  run.write_json("evaluation.json", {{"results", report}});
  return run.finish();
}

json command_embed(const PipelineConfig& cfg) {
  Run run(cfg, "embed");
  Staged s = stage_inputs(run, cfg);
  const auto matrices = matrices_for(run, cfg, s, true);
  run.lap("distances");
  json stress = json::object();
  for (const auto& m : matrices) {
    Warnings w;
    const Embedding e = classical_mds(m, cfg.mds_dim, &w);
    run.add_warnings(w);
    const std::string stem = "embedding-" + combo_name(m.measure, m.norm);
    run.write(stem + ".csv", [&](std::ostream& out) { write_embedding_csv(out, e, s.labels); });
    run.write(stem + ".svg", [&](std::ostream& out) { write_embedding_svg(out, e, s.labels); });
    stress[combo_name(m.measure, m.norm)] = {{"stress", e.stress}, {"eigenvalues", e.eigenvalues}};
  }
  run.lap("embed");
  return run.finish({{"embeddings", stress}});
}

json command_sweep(const PipelineConfig& cfg) {
  Run run(cfg, "sweep");
  const fs::path partial = run.path("sweep.partial.csv");
  const fs::path progress = run.path("sweep.progress.json");

  // Resume rows completed by an interrupted run with the same config.
  std::map<std::string, std::string> done;
  if (fs::exists(progress) && fs::exists(partial)) {
    json p = json::parse(io::read_file(progress));
    if (p.value("config_hash", std::string{}) == run.hash()) {
      std::istringstream lines(io::read_file(partial));
      std::string line;
      std::getline(lines, line);
      while (std::getline(lines, line)) {
        if (line.empty()) continue;
        auto cut = line.find(',');
        cut = line.find(',', cut + 1);
        cut = line.find(',', cut + 1);
        cut = line.find(',', cut + 1);
        done[line.substr(0, cut)] = line;
      }
    }
  }
  auto key_of = [](const SweepRow& r) {
    return std::string(to_string(r.estimator)) + "," + std::string(to_string(r.measure)) + "," +
           std::string(to_string(r.norm)) + "," + (r.invisibility ? "true" : "false");
  };

  const std::size_t total = cfg.sweep_estimators.size() * cfg.sweep_measures.size() *
                            cfg.sweep_norms.size() * cfg.sweep_invisibility.size();
  std::vector<std::string> lines;
  {
    std::ofstream log(partial, std::ios::trunc);
    log << sweep_header() << '\n';
    for (const auto& [k, l] : done) log << l << '\n';
  }
  auto mark = [&](std::size_t completed, bool complete) {
    io::write_atomically(progress, [&](std::ostream& out) {
      out << json{{"config_hash", run.hash()},
                  {"completed", completed},
                  {"total", total},
                  {"complete", complete}}
                 .dump(2)
          << '\n';
    });
  };
  std::size_t completed = done.size();
  mark(completed, false);

  run_sweep(
      cfg,
      [&](const SweepRow& row) {
        const std::string line = format_sweep_row(row);
        done[key_of(row)] = line;
        std::ofstream log(partial, std::ios::app);
        log << line << '\n';
        mark(++completed, false);
      },
      [&](const SweepRow& row) { return done.count(key_of(row)) > 0; });
  run.lap("sweep");

  // Emit in canonical combination order regardless of resume history.
  for (Estimator e : cfg.sweep_estimators)
    for (Measure m : cfg.sweep_measures)
      for (Norm n : cfg.sweep_norms)
        for (bool inv : cfg.sweep_invisibility) lines.push_back(done.at(key_of({e, m, n, inv})));
  run.write("sweep.csv", [&](std::ostream& out) {
    out << sweep_header() << '\n';
    for (const auto& l : lines) out << l << '\n';
  });
  mark(completed, true);
  fs::remove(partial);
  return run.finish({{"rows", lines.size()}});
}

}  // namespace wifiseg
