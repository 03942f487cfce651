#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wifiseg/io.hpp"
#include "wifiseg/pipeline.hpp"

using namespace wifiseg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wifiseg-test-" + name);
  fs::remove_all(p);
  return p;
}

std::vector<SegmentFingerprint> sample_fingerprints() {
  std::vector<SegmentFingerprint> out;
  EstimatorOptions o;
  o.laplace_epsilon = 1e-6;
  for (auto e : {Estimator::Pmf, Estimator::Normal, Estimator::Kde}) {
    SegmentFingerprint fp;
    fp.segment_id = out.size();
    fp.device = "dev,1";
    fp.method = e;
    fp.options = o;
    fp.per_ap.emplace("aa:01", estimate(e, std::vector<int>{-60, -61, -70}, o));
    fp.per_ap.emplace("aa:02", invisible_likelihood(e, o));
    out.push_back(fp);
  }
  return out;
}

}  // namespace

TEST_CASE("config JSON") {
  PipelineConfig cfg;
  cfg.measures = {Measure::Hellinger, Measure::KolmogorovSmirnov};
  cfg.window.threshold = 0.75;
  cfg.grouping = Grouping::RoomDay;
  const auto round = config_from_json(to_json(cfg));
  CHECK(to_json(round) == to_json(cfg));
  CHECK(config_hash(round) == config_hash(cfg));

  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"measurez", {"emd"}}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"measures", {"kl"}}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"estimator", "gmm"}}), UsageError);
  CHECK(config_from_json(nlohmann::json{{"estimator", "pmf"}}).estimator == Estimator::Pmf);
}

TEST_CASE("config hash ignores output location and workers") {
  PipelineConfig a, b;
  b.output_dir = "/elsewhere";
  b.jobs = 7;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 43;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("estimator options per measure") {
  PipelineConfig cfg;
  CHECK(cfg.estimator_options(Estimator::Pmf, Measure::SymmetrizedKl, true).laplace_epsilon == kDefaultLaplaceEpsilon);
  CHECK(cfg.estimator_options(Estimator::Pmf, Measure::EarthMovers, true).laplace_epsilon == 0.0);
  CHECK(cfg.estimator_options(Estimator::Kde, Measure::SymmetrizedKl, false).laplace_epsilon == 0.0);
  CHECK_FALSE(cfg.estimator_options(Estimator::Kde, Measure::EarthMovers, false).invisibility);
}

TEST_CASE("fingerprint JSONL round-trip") {
  const auto fps = sample_fingerprints();
  std::ostringstream out;
  io::write_fingerprints(out, fps);
  std::istringstream in(out.str());
  const auto back = io::read_fingerprints(in);
  REQUIRE(back.size() == fps.size());
  for (std::size_t i = 0; i < fps.size(); ++i) CHECK(back[i] == fps[i]);
}

TEST_CASE("matrix CSV and binary round-trip") {
  const auto fps = sample_fingerprints();
  std::vector<SegmentFingerprint> kde;
  for (std::size_t i = 0; i < 4; ++i) {
    auto fp = fps[2];
    fp.segment_id = 10 + i;
    fp.per_ap.erase("aa:02");
    fp.per_ap.emplace("aa:0" + std::to_string(3 + i), estimate_kde(std::vector<int>{-50 - int(i)}, 2.0));
    kde.push_back(fp);
  }
  const auto m = pairwise_matrix(kde, Measure::EarthMovers, Norm::L1);
  std::ostringstream csv, bin;
  io::write_matrix_csv(csv, m);
  io::write_matrix_binary(bin, m);
  std::istringstream csv_in(csv.str()), bin_in(bin.str());
  const auto from_csv = io::read_matrix_csv(csv_in);
  CHECK(from_csv.segment_ids == m.segment_ids);
  CHECK(from_csv.values == m.values);
  CHECK(bin.str().size() == 16 * sizeof(double));
  const auto from_bin = io::read_matrix(bin_in, io::matrix_metadata(m));
  CHECK(from_bin.values == m.values);
  CHECK(from_bin.segment_ids == m.segment_ids);
  CHECK(from_bin.measure == m.measure);
  CHECK(from_bin.norm == m.norm);
  std::istringstream short_in(bin.str().substr(8));
  CHECK_THROWS_AS(io::read_matrix(short_in, io::matrix_metadata(m)), DataError);
}

TEST_CASE("atomic writes") {
  const auto dir = scratch("atomic");
  fs::create_directories(dir);
  const auto file = dir / "x.txt";
  io::write_atomically(file, [](std::ostream& o) { o << "one\n"; });
  CHECK(io::read_file(file) == "one\n");
  CHECK_THROWS(io::write_atomically(file, [](std::ostream& o) {
    o << "partial";
    throw std::runtime_error("interrupted");
  }));
  CHECK(io::read_file(file) == "one\n");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  fs::remove_all(dir);
}

TEST_CASE("synthetic pipeline stages") {
  PipelineConfig cfg;
  const auto in = prepare_inputs(cfg);
  CHECK(in.synthetic);
  CHECK(in.device == "sim-0");
  const auto seg = run_segmentation(in, cfg);
  CHECK(seg.segments.size() == 36);
  const auto labels = resolve_labels(in, seg.segments);
  REQUIRE(labels.size() == 36);
  for (const auto& l : labels) CHECK(l.position.has_value());

  const auto raw = segments_for_fingerprinting(in, seg.segments, false);
  const auto aug = segments_for_fingerprinting(in, seg.segments, true);
  REQUIRE(raw.size() == aug.size());
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(aug[i].observations.size() >= raw[i].observations.size());

  const auto pooled = pool_room_days(seg.segments, labels);
  CHECK(pooled.size() == 12);

  const auto fps = build_fingerprints(in, aug, Estimator::Kde, cfg.estimator_options(Estimator::Kde, Measure::EarthMovers, true), cfg);
  const auto m = pairwise_matrix(fps, Measure::EarthMovers, Norm::L2);
  const auto r = evaluate_matrix(m, labels);
  CHECK(r.same_pairs == 36);
  CHECK(r.different_pairs == 594);
  CHECK(r.roc.auc > 0.95);
  REQUIRE(r.correlation.has_value());
}

TEST_CASE("commands write artifacts deterministically") {
  const auto root = scratch("commands");
  PipelineConfig cfg;
  cfg.measures = {Measure::EarthMovers, Measure::Hellinger};
  cfg.output_dir = root / "a";
  const auto manifest = command_distances(cfg);
  CHECK(manifest.at("config_hash") == config_hash(cfg));
  command_evaluate(cfg);
  for (const char* f : {"distances-emd-l2.csv", "distances-emd-l2.bin", "distances-emd-l2.json",
                        "distances-hellinger-l2.csv", "roc-emd-l2.csv", "roc-hellinger-l2.csv",
                        "evaluation.json", "manifest-distances.json", "manifest-evaluate.json"})
    CHECK_MESSAGE(fs::exists(cfg.output_dir / f), f);
  auto again = cfg;
  again.output_dir = root / "b";
  command_distances(again);
  command_evaluate(again);
  for (const char* f : {"distances-emd-l2.csv", "distances-emd-l2.bin", "roc-emd-l2.csv", "evaluation.json"})
    CHECK_MESSAGE(io::read_file(cfg.output_dir / f) == io::read_file(again.output_dir / f), f);

  auto sim = cfg;
  sim.output_dir = root / "sim";
  command_simulate(sim);
  CHECK(fs::exists(sim.output_dir / "wifi.csv"));
  CHECK(fs::exists(sim.output_dir / "accel.csv"));
  CHECK(fs::exists(sim.output_dir / "labels.csv"));

  // Replaying the simulated files segments them like synthetic mode does.
  auto replay = cfg;
  replay.output_dir = root / "replay";
  replay.wifi = sim.output_dir / "wifi.csv";
  replay.accel = sim.output_dir / "accel.csv";
  command_segment(replay);
  auto direct = cfg;
  direct.output_dir = root / "direct";
  command_segment(direct);
  CHECK(io::read_file(replay.output_dir / "segments.csv") == io::read_file(direct.output_dir / "segments.csv"));
  fs::remove_all(root);
}

TEST_CASE("sweep resumes from partial output") {
  const auto root = scratch("sweep");
  PipelineConfig cfg;
  cfg.sweep_estimators = {Estimator::Normal};
  cfg.sweep_measures = {Measure::EarthMovers, Measure::MeanAbsDiff};
  cfg.output_dir = root;
  command_sweep(cfg);
  const auto full = io::read_file(root / "sweep.csv");
  CHECK(std::count(full.begin(), full.end(), '\n') == 1 + 1 * 2 * 2 * 2);
  CHECK_FALSE(fs::exists(root / "sweep.partial.csv"));

  // Simulate an interrupted run: keep the header and two finished rows.
  std::istringstream lines(full);
  std::string header, r1, r2;
  std::getline(lines, header);
  std::getline(lines, r1);
  std::getline(lines, r2);
  {
    std::ofstream partial(root / "sweep.partial.csv");
    partial << header << '\n' << r2 << '\n' << r1 << '\n';
  }
  fs::remove(root / "sweep.csv");
  command_sweep(cfg);
  CHECK(io::read_file(root / "sweep.csv") == full);

  std::size_t seen = 0;
  run_sweep(cfg, [&](const SweepRow&) { ++seen; },
            [](const SweepRow& r) { return r.measure == Measure::MeanAbsDiff; });
  CHECK(seen == 4);
  fs::remove_all(root);
}

TEST_CASE("input errors surface with their kind") {
  PipelineConfig cfg;
  cfg.wifi = "/nonexistent/wifi.csv";
  CHECK_THROWS_AS(prepare_inputs(cfg), DataError);
  cfg = {};
  cfg.min_duration = -1;
  CHECK_THROWS_AS(run_segmentation(prepare_inputs(cfg), cfg), UsageError);
}
