#include "mmtrack/clustering.hpp"
#include "mmtrack/mc_study.hpp"
#include "mmtrack/pipeline.hpp"
#include "mmtrack/scenario_io.hpp"
#include "mmtrack/stream_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunOptions {
  std::string scenario = "A";
  std::size_t particles = 8;
  std::string sensors = "CLR";
  std::string heading_mode = "split";
  std::uint64_t seed = 1;
  std::string out;
  std::string weather = "sunny";

  std::string measurements;  // track: replay this stream instead of simulating
  std::string truth;
  std::string snapshots;

  std::string study = "person-cyclist";
  std::size_t iterations = 100;

  std::vector<std::size_t> counts{1, 4, 8, 12, 16, 20};
  std::size_t benchmark = 50;
  std::size_t seeds = 5;

  std::string cloud;
  double time = 0.0;
  std::vector<double> ego{0.0, 0.0, 0.0};
  std::string kernel = "corrected";
};

template <typename T>
void override_from(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

/// Values in the config file take precedence over command-line flags.
void apply_config(const std::string& path, RunOptions& o) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw mmtrack::ConfigError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw mmtrack::ConfigError("config " + path + " must be a JSON object");
  try {
    override_from(j, "scenario", o.scenario);
    override_from(j, "particles", o.particles);
    override_from(j, "sensors", o.sensors);
    override_from(j, "heading_mode", o.heading_mode);
    override_from(j, "seed", o.seed);
    override_from(j, "out", o.out);
    override_from(j, "weather", o.weather);
    override_from(j, "measurements", o.measurements);
    override_from(j, "truth", o.truth);
    override_from(j, "snapshots", o.snapshots);
    override_from(j, "study", o.study);
    override_from(j, "iterations", o.iterations);
    override_from(j, "counts", o.counts);
    override_from(j, "benchmark", o.benchmark);
    override_from(j, "seeds", o.seeds);
    override_from(j, "cloud", o.cloud);
    override_from(j, "time", o.time);
    override_from(j, "ego", o.ego);
    override_from(j, "kernel", o.kernel);
  } catch (const json::exception& e) {
    throw mmtrack::ConfigError("config " + path + ": " + e.what());
  }
}

void validate(const RunOptions& o) {
  if (o.particles < 1) throw mmtrack::ConfigError("--particles must be at least 1");
  if (o.sensors.empty()) throw mmtrack::ConfigError("--sensors needs at least one of C, L, R");
  mmtrack::parse_heading_mode(o.heading_mode);
}

mmtrack::Scenario resolve_scenario(const RunOptions& o) {
  if (fs::exists(o.scenario)) {
    mmtrack::Scenario s = mmtrack::load_scenario(o.scenario);
    return s;
  }
  if (o.scenario == "cluttered") return mmtrack::cluttered_scenario(o.seed);
  if (o.scenario.size() == 1) return mmtrack::builtin_scenario(o.scenario[0], o.weather, o.seed);
  throw std::runtime_error("scenario file not found: " + o.scenario);
}

fs::path out_dir(const RunOptions& o) {
  fs::path p = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(p);
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << std::setprecision(10);
  return f;
}

template <typename T, typename Reader>
T read_file(const std::string& path, Reader reader) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return reader(in);
}

json report_json(const mmtrack::TrackingReport& r) {
  return {{"object_tracked", r.object_tracked}, {"range_rms", r.range_rms},
          {"bearing_rms", r.bearing_rms},       {"correct_class", r.correct_class},
          {"mis_class", r.mis_class},           {"unclassified", r.unclassified},
          {"n_returns", r.n_returns},           {"truth_ticks", r.truth_ticks}};
}

void write_report_table(std::ostream& out, const std::vector<std::pair<std::string, mmtrack::TrackingReport>>& rows) {
  out << "subset\tobject_tracked\trange_rms_m\tbearing_rms_rad\tcorrect\tmis\tunclassified\treturns\n";
  for (const auto& [name, r] : rows)
    out << name << '\t' << r.object_tracked << '\t' << r.range_rms << '\t' << r.bearing_rms << '\t'
        << r.correct_class << '\t' << r.mis_class << '\t' << r.unclassified << '\t' << r.n_returns << '\n';
}

void write_count_trace(const fs::path& path, const std::vector<mmtrack::SnapshotFrame>& frames) {
  const mmtrack::FrameCounts c = mmtrack::count_tracks(frames);
  std::ofstream f = open_out(path);
  f << "t\ttracks\tclassified\n";
  for (std::size_t k = 0; k < frames.size(); ++k) f << frames[k].t << '\t' << c.overall[k] << '\t' << c.classified[k] << '\n';
}

void emit_reports(const fs::path& dir, const std::vector<mmtrack::TruthSample>& truth,
                  const std::vector<mmtrack::SnapshotFrame>& frames) {
  mmtrack::EvalOptions opts;
  const mmtrack::TrackingReport all = mmtrack::score_run(truth, frames, opts);
  opts.truth_classes = {mmtrack::ObjectClass::Car, mmtrack::ObjectClass::Bus, mmtrack::ObjectClass::Cyclist};
  const mmtrack::TrackingReport veh = mmtrack::score_run(truth, frames, opts);
  opts.truth_classes = {mmtrack::ObjectClass::Pedestrian};
  const mmtrack::TrackingReport per = mmtrack::score_run(truth, frames, opts);
  const std::vector<std::pair<std::string, mmtrack::TrackingReport>> rows{{"all", all}, {"vehicles", veh}, {"persons", per}};

  write_report_table(std::cout, rows);
  std::ofstream tsv = open_out(dir / "report.tsv");
  write_report_table(tsv, rows);
  json j = {{"all", report_json(all)}, {"vehicles", report_json(veh)}, {"persons", report_json(per)},
            {"range_error", "centroid"}};
  open_out(dir / "report.json") << j.dump(2) << '\n';
}

int cmd_simulate(const RunOptions& o) {
  mmtrack::Scenario s = resolve_scenario(o);
  mmtrack::select_sensors(s, o.sensors);
  const mmtrack::SimOutput sim = mmtrack::run_scenario(s);
  const fs::path dir = out_dir(o);
  std::ofstream m = open_out(dir / "measurements.txt");
  mmtrack::write_measurements(m, sim.measurements);
  std::ofstream t = open_out(dir / "truth.txt");
  mmtrack::write_truth(t, sim.truth);
  std::cout << sim.measurements.size() << " measurements, " << sim.truth.size() << " truth samples\n";
  return 0;
}

int cmd_track(const RunOptions& o) {
  const mmtrack::HeadingMode mode = mmtrack::parse_heading_mode(o.heading_mode);
  const fs::path dir = out_dir(o);
  const mmtrack::TrackerConfig cfg = mmtrack::scenario_tracker_config(o.particles, mode, o.seed);

  std::vector<mmtrack::Measurement> stream;
  std::vector<mmtrack::TruthSample> truth;
  double rate = 10.0;
  double t_end = 0.0;
  if (!o.measurements.empty()) {
    stream = read_file<std::vector<mmtrack::Measurement>>(o.measurements, mmtrack::read_measurements);
    if (!o.truth.empty()) truth = read_file<std::vector<mmtrack::TruthSample>>(o.truth, mmtrack::read_truth);
    t_end = stream.empty() ? 0.0 : stream.back().t;
  } else {
    mmtrack::Scenario s = resolve_scenario(o);
    mmtrack::select_sensors(s, o.sensors);
    mmtrack::SimOutput sim = mmtrack::run_scenario(s);
    rate = s.output_rate;
    t_end = s.duration;
    stream = std::move(sim.measurements);
    truth = std::move(sim.truth);
    std::ofstream m = open_out(dir / "measurements.txt");
    mmtrack::write_measurements(m, stream);
    std::ofstream t = open_out(dir / "truth.txt");
    mmtrack::write_truth(t, truth);
  }

  const auto frames = mmtrack::track_stream(cfg, stream, rate, t_end);
  std::ofstream snap = open_out(dir / "snapshots.txt");
  mmtrack::write_snapshots(snap, frames);
  write_count_trace(dir / "trace_counts.tsv", frames);
  if (!truth.empty()) emit_reports(dir, truth, frames);
  return 0;
}

int cmd_score(const RunOptions& o) {
  if (o.truth.empty() || o.snapshots.empty()) throw mmtrack::ConfigError("score needs --truth and --snapshots");
  const auto truth = read_file<std::vector<mmtrack::TruthSample>>(o.truth, mmtrack::read_truth);
  const auto frames = read_file<std::vector<mmtrack::SnapshotFrame>>(o.snapshots, mmtrack::read_snapshots);
  emit_reports(out_dir(o), truth, frames);
  return 0;
}

int cmd_mc(const RunOptions& o) {
  mmtrack::McStudyConfig cfg;
  if (o.study == "person-cyclist") {
    cfg = mmtrack::person_cyclist_study(o.seed);
  } else if (o.study == "gps") {
    cfg = mmtrack::gps_four_class_study(o.seed);
  } else {
    throw mmtrack::ConfigError("unknown study '" + o.study + "' (person-cyclist | gps)");
  }
  cfg.iterations = o.iterations;
  const mmtrack::McReport rep = mmtrack::run_mc_study(cfg);

  std::ostringstream table;
  table << std::setprecision(6) << "truth\ttracks";
  for (auto m : rep.models) table << "\tnis_" << mmtrack::to_string(m);
  for (auto m : rep.models) table << "\tpct_" << mmtrack::to_string(m);
  table << '\n';
  json rows = json::array();
  for (const auto& r : rep.rows) {
    table << mmtrack::to_string(r.truth) << '\t' << r.tracks;
    json row = {{"truth", mmtrack::to_string(r.truth)}, {"tracks", r.tracks}};
    for (std::size_t m = 0; m < rep.models.size(); ++m) {
      table << '\t' << r.mean_nis[m];
      row["mean_nis"][std::string(mmtrack::to_string(rep.models[m]))] = r.mean_nis[m];
    }
    for (std::size_t m = 0; m < rep.models.size(); ++m) {
      table << '\t' << 100.0 * r.fraction(m);
      row["classified_pct"][std::string(mmtrack::to_string(rep.models[m]))] = 100.0 * r.fraction(m);
    }
    table << '\n';
    rows.push_back(row);
  }
  std::cout << table.str() << "runtime " << rep.seconds << " s\n";
  if (!o.out.empty()) {
    const fs::path dir = out_dir(o);
    open_out(dir / "mc.tsv") << table.str();
    open_out(dir / "mc.json") << json{{"study", o.study}, {"seed", o.seed}, {"rows", rows}, {"seconds", rep.seconds}}.dump(2)
                              << '\n';
  }
  return 0;
}

int cmd_particle_study(const RunOptions& o) {
  if (o.counts.empty()) throw mmtrack::ConfigError("--counts must not be empty");
  if (o.seeds < 1) throw mmtrack::ConfigError("--seeds must be at least 1");
  mmtrack::Scenario s = resolve_scenario(o);
  mmtrack::select_sensors(s, o.sensors);
  const mmtrack::SimOutput sim = mmtrack::run_scenario(s);
  const mmtrack::HeadingMode mode = mmtrack::parse_heading_mode(o.heading_mode);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < o.seeds; ++i) seeds.push_back(o.seed + i);
  const mmtrack::ParticleStudy st = mmtrack::particle_study(
      sim.measurements, mmtrack::scenario_tracker_config(o.benchmark, mode, o.seed), o.counts, o.benchmark, seeds,
      s.output_rate, s.duration);

  std::ostringstream table;
  table << "particles\trms_overall\trms_classified\n";
  for (std::size_t c = 0; c < o.counts.size(); ++c)
    table << o.counts[c] << '\t' << st.overall[c].rms << '\t' << st.classified[c].rms << '\n';
  std::cout << table.str();
  const fs::path dir = out_dir(o);
  open_out(dir / "particle_study.tsv") << table.str();
  for (std::size_t c = 0; c < o.counts.size(); ++c) {
    for (const auto& [tag, cdf] : {std::pair{"overall", &st.overall[c]}, std::pair{"classified", &st.classified[c]}}) {
      std::ofstream f = open_out(dir / ("cdf_" + std::string(tag) + "_" + std::to_string(o.counts[c]) + ".tsv"));
      f << "error\tcdf\n";
      for (std::size_t i = 0; i < cdf->sorted.size(); ++i)
        if (i + 1 == cdf->sorted.size() || cdf->sorted[i + 1] != cdf->sorted[i])
          f << cdf->sorted[i] << '\t' << static_cast<double>(i + 1) / static_cast<double>(cdf->sorted.size()) << '\n';
    }
  }
  return 0;
}

int cmd_cluster(const RunOptions& o) {
  if (o.cloud.empty()) throw mmtrack::ConfigError("cluster needs --cloud");
  if (o.ego.size() != 3) throw mmtrack::ConfigError("--ego takes x y yaw");
  const mmtrack::PointCloud2D cloud =
      read_file<mmtrack::PointCloud2D>(o.cloud, [](std::istream& in) { return mmtrack::read_point_cloud(in); });
  mmtrack::LogParams lp;
  if (o.kernel == "corrected") {
    lp.form = mmtrack::LogKernelForm::Corrected;
  } else if (o.kernel == "as-printed") {
    lp.form = mmtrack::LogKernelForm::AsPrinted;
  } else {
    throw mmtrack::ConfigError("unknown kernel '" + o.kernel + "' (corrected | as-printed)");
  }

  std::vector<mmtrack::Cluster> clusters = mmtrack::cluster_cars(cloud);
  std::vector<bool> claimed(cloud.points.size(), false);
  for (const auto& c : clusters)
    for (std::size_t i : c.members) claimed[i] = true;
  mmtrack::PointCloud2D above;
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    if (cloud.points[i].above_ground && !claimed[i]) above.points.push_back(cloud.points[i]);
  if (!above.points.empty()) {
    const auto people = mmtrack::extract_person_peaks(mmtrack::log_response(above, lp), mmtrack::default_person_threshold(lp));
    clusters.insert(clusters.end(), people.begin(), people.end());
  }

  mmtrack::EgoPose ego;
  ego.x = o.ego[0];
  ego.y = o.ego[1];
  ego.yaw = o.ego[2];
  const auto ms = mmtrack::clusters_to_measurements(clusters, o.time, ego, 2);

  std::ostringstream table;
  table << std::setprecision(10) << "east\tnorth\textent\tsize\tpoints\n";
  for (const auto& c : clusters)
    table << c.centroid.x() << '\t' << c.centroid.y() << '\t' << c.extent << '\t'
          << (c.size_class == mmtrack::SizeClass::Car ? "car" : "person") << '\t' << c.point_count << '\n';
  std::cout << table.str();
  if (!o.out.empty()) {
    const fs::path dir = out_dir(o);
    open_out(dir / "clusters.tsv") << table.str();
    std::ofstream m = open_out(dir / "measurements.txt");
    mmtrack::write_measurements(m, ms);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-object tracking with particle-filter data association and multiple-model classification"};
  app.require_subcommand(1);
  RunOptions o;
  std::string config;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON file whose values override the flags");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output directory");
  };
  auto scene = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "Scenario YAML file or built-in name (A, B, C, cluttered)");
    sub->add_option("--sensors", o.sensors, "Sensor subset, letters from CLR");
    sub->add_option("--weather", o.weather, "Weather preset for built-in scenarios");
  };

  auto* sim = app.add_subcommand("simulate", "Simulate a scenario and write measurements and truth");
  common(sim);
  scene(sim);

  auto* track = app.add_subcommand("track", "Run the tracker over a scenario or a recorded stream");
  common(track);
  scene(track);
  track->add_option("--particles", o.particles, "Number of particles");
  track->add_option("--heading-mode", o.heading_mode, "split | raw-gaussian");
  track->add_option("--measurements", o.measurements, "Replay this measurement file instead of simulating");
  track->add_option("--truth", o.truth, "Truth file used to score a replayed stream");

  auto* score = app.add_subcommand("score", "Score snapshots against truth");
  common(score);
  score->add_option("--truth", o.truth, "Truth file");
  score->add_option("--snapshots", o.snapshots, "Snapshot file");

  auto* mc = app.add_subcommand("mc", "Monte Carlo classification study on synthetic GPS tracks");
  common(mc);
  mc->add_option("--study", o.study, "person-cyclist | gps");
  mc->add_option("--iterations", o.iterations, "Tracks per class");

  auto* ps = app.add_subcommand("particle-study", "Object-count error against a many-particle benchmark");
  common(ps);
  scene(ps);
  ps->add_option("--counts", o.counts, "Particle counts to compare");
  ps->add_option("--benchmark", o.benchmark, "Benchmark particle count");
  ps->add_option("--seeds", o.seeds, "Number of tracker seeds, starting at --seed");
  ps->add_option("--heading-mode", o.heading_mode, "split | raw-gaussian");

  auto* cl = app.add_subcommand("cluster", "Cluster a lidar point cloud into car and person returns");
  common(cl);
  cl->add_option("--cloud", o.cloud, "Point file with east north height per line");
  cl->add_option("--time", o.time, "Timestamp of the scan");
  cl->add_option("--ego", o.ego, "Ego pose x y yaw")->expected(3);
  cl->add_option("--kernel", o.kernel, "corrected | as-printed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (!config.empty()) apply_config(config, o);
    validate(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (track->parsed()) return cmd_track(o);
    if (score->parsed()) return cmd_score(o);
    if (mc->parsed()) return cmd_mc(o);
    if (ps->parsed()) return cmd_particle_study(o);
    if (cl->parsed()) return cmd_cluster(o);
  } catch (const mmtrack::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
