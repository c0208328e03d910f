#include "mmtrack/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace mmtrack {

TrackerConfig scenario_tracker_config(std::size_t particles, HeadingMode mode, std::uint64_t seed) {
  TrackerConfig cfg;
  cfg.classes = models_for({ObjectClass::Pedestrian, ObjectClass::Car});
  cfg.num_particles = particles;
  cfg.p_birth = 0.01;
  cfg.p_clutter = 0.1;
  cfg.heading_mode = mode;
  cfg.seed = seed;
  return cfg;
}

std::vector<SnapshotFrame> track_stream(const TrackerConfig& cfg, std::span<const Measurement> stream,
                                        double output_rate, double t_end) {
  if (!(output_rate > 0.0)) throw std::invalid_argument("output rate must be positive");
  Rbpf filter(cfg);
  std::vector<SnapshotFrame> frames;
  std::size_t next = 0;
  const auto ticks = static_cast<long>(std::floor(t_end * output_rate + 1e-9));
  for (long k = 0; k <= ticks; ++k) {
    const double tick = static_cast<double>(k) / output_rate;
    while (next < stream.size() && stream[next].t <= tick + 1e-9) filter.step(stream[next++]);
    frames.push_back({tick, filter.snapshot(std::max(tick, filter.last_time()))});
  }
  return frames;
}

ScenarioEvaluation evaluate_scenario(Scenario scenario, const std::string& sensors, HeadingMode mode,
                                     std::size_t particles, std::uint64_t tracker_seed,
                                     const EvalOptions& opts) {
  select_sensors(scenario, sensors);
  const SimOutput sim = run_scenario(scenario);
  const auto frames = track_stream(scenario_tracker_config(particles, mode, tracker_seed), sim.measurements,
                                   scenario.output_rate, scenario.duration);
  ScenarioEvaluation out;
  out.all = score_run(sim.truth, frames, opts);
  EvalOptions o = opts;
  o.truth_classes = {ObjectClass::Car, ObjectClass::Bus, ObjectClass::Cyclist};
  out.vehicles = score_run(sim.truth, frames, o);
  o.truth_classes = {ObjectClass::Pedestrian};
  out.persons = score_run(sim.truth, frames, o);
  return out;
}

ScenarioEvaluation combine_evaluations(std::span<const ScenarioEvaluation> runs) {
  std::vector<TrackingReport> all, veh, per;
  for (const auto& r : runs) {
    all.push_back(r.all);
    veh.push_back(r.vehicles);
    per.push_back(r.persons);
  }
  return {combine_reports(all), combine_reports(veh), combine_reports(per)};
}

}  // namespace mmtrack
