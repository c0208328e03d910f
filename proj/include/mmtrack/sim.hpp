#pragma once

#include "mmtrack/measurement.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mmtrack {

// ---------------------------------------------------------------------------
// Monte Carlo single-object tracks

struct McTrackConfig {
  ObjectClass cls = ObjectClass::Pedestrian;
  double duration = 50.0;  // s
  double rate = 1.0;       // Hz
  Eigen::Matrix2d meas_cov = (Eigen::Matrix2d() << 1.2, 0.1, 0.1, 1.2).finished();
  double box = 20.0;       // initial position uniform in [0, box]^2
  double speed_min = 0.0;  // m/s; both zero selects the class default range
  double speed_max = 0.0;
  double noise_scale = 1.0;  // multiplies the class process noise of the rollout
  double stop_probability = 0.0;  // per-sample chance a wheeled object halts for a while
};

struct McTrack {
  MotionModel model;
  std::vector<double> t;
  std::vector<StateVec> truth;     // class-specific layout
  std::vector<Eigen::Vector2d> z;  // noisy positions
  Eigen::Matrix2d meas_cov;
};

/// Default initial speed range per class (m/s).
std::pair<double, double> default_speed_range(ObjectClass c);

/// Rollout of the class's own Euler dynamics with sampled process noise and
/// noisy position measurements at every sample, including t = 0.
McTrack generate_mc_track(const McTrackConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Scripted scenarios

struct Waypoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Piecewise-linear trajectory; defined on [front().t, back().t].
struct Trajectory {
  std::vector<Waypoint> points;

  bool active(double t) const;
  Eigen::Vector2d position(double t) const;
  Eigen::Vector2d velocity(double t) const;
  /// Direction of travel; holds the last moving direction while stopped.
  double heading(double t) const;
};

struct TruthObject {
  int id = 0;
  ObjectClass cls = ObjectClass::Car;
  Trajectory path;
};

enum class SensorKind { Radar, Camera, Lidar, Gps };

std::string_view to_string(SensorKind k);
SensorKind parse_sensor_kind(std::string_view name);

struct DetectionRates {
  double recall = 1.0;
  double precision = 1.0;  // probability the emitted label is right
  double max_range = 20.0;
};

struct SensorSim {
  int id = 0;
  SensorKind kind = SensorKind::Lidar;
  double rate = 10.0;                       // Hz
  double fov_half = 1.5707963267948966;     // rad either side of the ego heading
  double max_range = 20.0;                  // m
  DetectionRates vehicle;                   // cars, buses, cyclists
  DetectionRates person;
  bool detects_persons = true;
  bool emits_labels = true;
  double clutter_rate = 0.0;  // expected false positives per scan

  // noise, standard deviations
  double position_sd = 0.3;          // lidar cluster, gps (m)
  double range_sd = 0.5;             // radar (m)
  double bearing_sd = 0.02;          // radar and camera (rad)
  double range_rate_sd = 0.3;        // radar (m/s)
  double camera_height = 1.8;        // m, flat-plane range model
  double depression_sd = 0.01;       // rad
  double heading_sd = 0.1;           // rad
  double heading_precision = 0.95;   // probability the heading is not reversed
  bool emits_heading = true;         // camera heading on vehicle-labelled detections

  void validate() const;
};

/// Sensor tuned to a weather preset: "sunny", "night", "wet_cloudy", "snow_rain".
SensorSim sensor_preset(SensorKind kind, const std::string& weather, int id);

struct Scenario {
  std::string name;
  double duration = 20.0;  // s
  std::uint64_t seed = 1;
  double output_rate = 10.0;  // Hz, truth log and snapshot rate
  std::string weather = "sunny";
  Trajectory ego;  // empty means parked at the origin facing east
  std::vector<TruthObject> objects;
  std::vector<SensorSim> sensors;

  void validate() const;
};

struct TruthSample {
  double t = 0.0;
  int id = 0;
  ObjectClass cls = ObjectClass::Car;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double heading = 0.0;
  EgoPose ego;
};

struct SimOutput {
  std::vector<Measurement> measurements;  // sorted by (t, sensor id)
  std::vector<TruthSample> truth;         // at output_rate
};

EgoPose ego_pose(const Scenario& s, double t);

SimOutput run_scenario(const Scenario& s);

/// Intersection scenario geometries A, B and C (weather preset applied to the sensors).
Scenario builtin_scenario(char which, const std::string& weather, std::uint64_t seed);

/// Busy scene with several objects and clutter for particle-count studies.
Scenario cluttered_scenario(std::uint64_t seed);

/// Keeps only the sensors whose kind letter (C, L, R, G) appears in `subset`.
void select_sensors(Scenario& s, const std::string& subset);

}  // namespace mmtrack
