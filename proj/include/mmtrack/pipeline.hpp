#pragma once

#include "mmtrack/eval.hpp"
#include "mmtrack/rbpf.hpp"

#include <span>
#include <string>

namespace mmtrack {

/// Tracker set up for the intersection scenes: pedestrian and car classes, with
/// birth and clutter priors matched to the simulated sensor clutter.
TrackerConfig scenario_tracker_config(std::size_t particles, HeadingMode mode, std::uint64_t seed);

/// Runs the tracker over a time-sorted stream and exports the best particle at
/// every output tick from 0 to t_end.
std::vector<SnapshotFrame> track_stream(const TrackerConfig& cfg, std::span<const Measurement> stream,
                                        double output_rate, double t_end);

struct ScenarioEvaluation {
  TrackingReport all;
  TrackingReport vehicles;
  TrackingReport persons;
};

/// Simulates `scenario` with the given sensor subset (letters C, L, R), tracks
/// it and scores the result.
ScenarioEvaluation evaluate_scenario(Scenario scenario, const std::string& sensors, HeadingMode mode,
                                     std::size_t particles, std::uint64_t tracker_seed,
                                     const EvalOptions& opts = {});

ScenarioEvaluation combine_evaluations(std::span<const ScenarioEvaluation> runs);

}  // namespace mmtrack
