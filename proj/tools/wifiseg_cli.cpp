// wifiseg: stationary-segment WiFi fingerprinting pipeline.
//
//   wifiseg simulate   --out run/ --seed 42
//   wifiseg segment    --wifi run/wifi.csv --accel run/accel.csv --out run/
//   wifiseg evaluate   --wifi ... --labels run/labels.csv --measure emd --norm l2
//   wifiseg sweep      --out run/            (synthetic scene when --wifi is absent)

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wifiseg/io.hpp"
#include "wifiseg/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace wifiseg;

struct Flags {
  std::string config;
  std::string wifi, accel, blacklist, labels, scene, device, out;
  std::string estimator, grouping, statistic;
  std::vector<std::string> measures, norms;
  std::vector<std::string> sweep_estimators, sweep_measures, sweep_norms;
  double bandwidth = 0, laplace_epsilon = 0, sigma_min2 = 0, threshold = 0, cap = 0;
  double grid_lo = 0, grid_hi = 0, grid_step = 0;
  long long window_len = 0, hop = 0, min_duration = 0, scan_epsilon = 0;
  std::uint64_t seed = 0;
  std::size_t mds_dim = 0;
  int jobs = 0;
  bool invisibility = true;
  bool assume_stationary = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "JSON configuration file");
  cmd->add_option("--wifi", f.wifi, "WiFi records (.csv or .jsonl); omit for a synthetic scene");
  cmd->add_option("--accel", f.accel, "acceleration records (.csv or .jsonl)");
  cmd->add_option("--blacklist", f.blacklist, "SSID blacklist (prefix:/suffix: rules)");
  cmd->add_option("--labels", f.labels, "ground truth CSV segment_id,label,x,y");
  cmd->add_option("--scene", f.scene, "synthetic scene JSON");
  cmd->add_option("--device", f.device, "device to analyse");
  cmd->add_option("-o,--out", f.out, "output directory (default $WIFISEG_OUTPUT_DIR or ./wifiseg-out)");
  cmd->add_option("-j,--jobs", f.jobs, "worker threads");
  cmd->add_option("--seed", f.seed, "synthetic scene seed");
  cmd->add_option("--estimator", f.estimator, "pmf | normal | kde");
  cmd->add_option("--bandwidth", f.bandwidth, "KDE bandwidth (dBm)");
  cmd->add_option("--laplace-epsilon", f.laplace_epsilon, "PMF smoothing constant");
  cmd->add_option("--sigma-min2", f.sigma_min2, "Normal variance floor (dBm^2)");
  cmd->add_flag("--invisibility,!--no-invisibility", f.invisibility, "model AP invisibility");
  cmd->add_option("--measure", f.measures, "distance measure(s)");
  cmd->add_option("--norm", f.norms, "aggregation norm(s): l1 | l2");
  cmd->add_option("--grid-lo", f.grid_lo, "quadrature grid lower bound (dBm)");
  cmd->add_option("--grid-hi", f.grid_hi, "quadrature grid upper bound (dBm)");
  cmd->add_option("--grid-step", f.grid_step, "quadrature grid step (dBm)");
  cmd->add_option("--bhattacharyya-cap", f.cap, "value for non-overlapping supports");
  cmd->add_option("--window-len", f.window_len, "motion window length (ms)");
  cmd->add_option("--hop", f.hop, "motion window hop (ms)");
  cmd->add_option("--statistic", f.statistic, "energy | variance");
  cmd->add_option("--threshold", f.threshold, "motion threshold ((m/s^2)^2)");
  cmd->add_flag("--assume-stationary", f.assume_stationary,
                "treat the WiFi span as stationary when there is no acceleration data");
  cmd->add_option("--min-duration", f.min_duration, "minimum stationary segment length (ms)");
  cmd->add_option("--scan-epsilon", f.scan_epsilon, "scan grouping tolerance (ms)");
  cmd->add_option("--grouping", f.grouping, "segment | room-day");
  cmd->add_option("--mds-dim", f.mds_dim, "embedding dimension");
  cmd->add_option("--sweep-estimator", f.sweep_estimators, "sweep estimators");
  cmd->add_option("--sweep-measure", f.sweep_measures, "sweep measures");
  cmd->add_option("--sweep-norm", f.sweep_norms, "sweep norms");
}

// Layers command-line values over the config file.
PipelineConfig build_config(CLI::App* cmd, const Flags& f) {
  json j = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot open config file " + f.config);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(std::string("config file is not valid JSON: ") + e.what());
    }
  }
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  auto set = [&](const char* flag, const char* key, auto value) {
    if (given(flag)) j[key] = value;
  };
  set("--wifi", "wifi", f.wifi);
  set("--accel", "accel", f.accel);
  set("--blacklist", "blacklist", f.blacklist);
  set("--labels", "labels", f.labels);
  set("--scene", "scene", f.scene);
  set("--device", "device", f.device);
  set("--out", "output_dir", f.out);
  set("--jobs", "jobs", f.jobs);
  set("--seed", "seed", f.seed);
  set("--estimator", "estimator", f.estimator);
  set("--bandwidth", "bandwidth", f.bandwidth);
  set("--laplace-epsilon", "laplace_epsilon", f.laplace_epsilon);
  set("--sigma-min2", "sigma_min2", f.sigma_min2);
  if (given("--invisibility") || given("--no-invisibility")) j["invisibility"] = f.invisibility;
  set("--measure", "measures", f.measures);
  set("--norm", "norms", f.norms);
  set("--bhattacharyya-cap", "bhattacharyya_cap", f.cap);
  set("--min-duration", "min_duration", f.min_duration);
  set("--scan-epsilon", "scan_epsilon", f.scan_epsilon);
  set("--grouping", "grouping", f.grouping);
  set("--mds-dim", "mds_dim", f.mds_dim);
  if (given("--grid-lo")) j["grid"]["lo"] = f.grid_lo;
  if (given("--grid-hi")) j["grid"]["hi"] = f.grid_hi;
  if (given("--grid-step")) j["grid"]["step"] = f.grid_step;
  if (given("--window-len")) j["window"]["window_len"] = f.window_len;
  if (given("--hop")) j["window"]["hop"] = f.hop;
  if (given("--statistic")) j["window"]["statistic"] = f.statistic;
  if (given("--threshold")) j["window"]["threshold"] = f.threshold;
  if (given("--assume-stationary")) j["window"]["assume_stationary_when_no_accel"] = true;
  if (given("--sweep-estimator")) j["sweep"]["estimators"] = f.sweep_estimators;
  if (given("--sweep-measure")) j["sweep"]["measures"] = f.sweep_measures;
  if (given("--sweep-norm")) j["sweep"]["norms"] = f.sweep_norms;

  PipelineConfig cfg = config_from_json(j);
  if (cfg.output_dir.empty()) {
    const char* env = std::getenv("WIFISEG_OUTPUT_DIR");
    cfg.output_dir = env && *env ? env : "wifiseg-out";
  }
  return cfg;
}

int report_failure(const std::filesystem::path& out_dir, const std::string& command, int code,
                   const std::string& kind, const std::string& message) {
  json err = {{"command", command}, {"exit_code", code}, {"error", kind}, {"message", message}};
  std::cerr << err.dump() << '\n';
  if (!out_dir.empty()) {
    try {
      io::write_atomically(out_dir / "error.json",
                           [&](std::ostream& out) { out << err.dump(2) << '\n'; });
    } catch (...) {
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary-segment WiFi fingerprints: segmentation, likelihoods, distances, evaluation"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"simulate", "generate a labeled synthetic scene (wifi.csv, accel.csv, labels.csv)"},
      {"segment", "motion segmentation and stationary WiFi segments"},
      {"fingerprint", "per-segment RSSI likelihood fingerprints"},
      {"distances", "pairwise segment distance matrices"},
      {"evaluate", "ROC/AUC and floor-plan correlations"},
      {"embed", "classical MDS layout of segments"},
      {"sweep", "all estimator x measure x norm x invisibility combinations"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, flags);
    subs.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* cmd = nullptr;
  for (auto* s : subs)
    if (s->parsed()) cmd = s;
  const std::string name = cmd->get_name();

  std::filesystem::path out_dir;
  try {
    PipelineConfig cfg = build_config(cmd, flags);
    out_dir = cfg.output_dir;
    set_worker_count(cfg.jobs);
    json manifest;
    if (name == "simulate") manifest = command_simulate(cfg);
    else if (name == "segment") manifest = command_segment(cfg);
    else if (name == "fingerprint") manifest = command_fingerprint(cfg);
    else if (name == "distances") manifest = command_distances(cfg);
    else if (name == "evaluate") manifest = command_evaluate(cfg);
    else if (name == "embed") manifest = command_embed(cfg);
    else manifest = command_sweep(cfg);
    for (const auto& w : manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    std::cout << name << ": wrote " << manifest["artifacts"].size() << " artifact(s) to "
              << out_dir.string() << " (config " << manifest["config_hash"].get<std::string>()
              << ")\n";
    return 0;
  } catch (const UsageError& e) {
    return report_failure(out_dir, name, 1, "usage", e.what());
  } catch (const DataError& e) {
    return report_failure(out_dir, name, 2, "data", e.what());
  } catch (const NumericError& e) {
    return report_failure(out_dir, name, 3, "numeric", e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_failure(out_dir, name, 2, "data", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_failure(out_dir, name, 2, "data", e.what());
  } catch (const std::exception& e) {
    return report_failure(out_dir, name, 3, "internal", e.what());
  }
}
