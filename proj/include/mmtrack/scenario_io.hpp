#pragma once

#include "mmtrack/sim.hpp"

#include <string>

namespace mmtrack {

/// Parses a YAML scenario description. Schema errors raise ConfigError.
///
///   name: B
///   builtin: B            # optional: start from a built-in scene (A, B, C, cluttered)
///   duration: 20
///   seed: 7
///   output_rate: 10
///   weather: sunny        # sunny | night | wet_cloudy | snow_rain
///   ego: [[t, x, y], ...] # optional, parked at the origin facing east otherwise
///   objects:
///     - id: 1
///       class: car
///       waypoints: [[t, x, y], ...]
///     - id: 2
///       class: pedestrian
///       rollout: {start: 0, end: 15, x: 3, y: -8, speed: 1.3, heading: 1.57}
///   sensors:              # optional, camera + lidar + radar presets otherwise
///     - kind: camera      # camera | lidar | radar | gps
///       id: 1
///       rate: 10
///       clutter_rate: 0.1
///       vehicle: {recall: 0.85, precision: 0.95, max_range: 15}
///       person: {recall: 0.7, precision: 0.9, max_range: 10}
///       noise: {bearing_sd: 0.03, depression_sd: 0.01, heading_sd: 0.15}
Scenario parse_scenario(const std::string& yaml_text);

/// Reads and parses a scenario file; a missing file raises std::runtime_error.
Scenario load_scenario(const std::string& path);

}  // namespace mmtrack
