#pragma once

#include "mmtrack/common.hpp"

#include <optional>
#include <vector>

namespace mmtrack {

enum class Dynamics {
  ConstantVelocity,  // pedestrian: double integrator driven by white acceleration
  Unicycle,          // wheeled: x1' = v cos(theta), x2' = v sin(theta), v' = e_v, theta' = e_theta
};

/// Process noise parameterization of one object class.
struct NoiseSpec {
  double accel_sd = 0.0;               // m/s^2
  std::optional<double> rot_sd_deg;    // deg/s, wheeled classes only
  ObjectClass class_id = ObjectClass::Pedestrian;
};

struct MotionModel {
  ObjectClass cls = ObjectClass::Pedestrian;
  Dynamics dynamics = Dynamics::ConstantVelocity;
  NoiseSpec noise;

  /// Process noise identified from hand-held GPS tracks
  /// (pedestrian 0.04, car 0.6, bus 0.4, cyclist 0.31 m/s^2; 15 deg/s rotation).
  static MotionModel for_class(ObjectClass c);

  void validate() const;
};

std::vector<MotionModel> models_for(const std::vector<ObjectClass>& classes);

struct PedestrianState {
  double x1 = 0.0, x2 = 0.0, v1 = 0.0, v2 = 0.0;
  StateVec vec() const { return {x1, x2, v1, v2}; }
  static PedestrianState from(const StateVec& s) { return {s[0], s[1], s[2], s[3]}; }
};

struct WheeledState {
  double x1 = 0.0, x2 = 0.0, v = 0.0, theta = 0.0;
  StateVec vec() const { return {x1, x2, v, theta}; }
  static WheeledState from(const StateVec& s) { return {s[0], s[1], s[2], s[3]}; }
};

// Euler integration. Intervals longer than kMaxSingleStep are split into
// equal sub-steps no longer than kSubStep.
inline constexpr double kMaxSingleStep = 1.5;
inline constexpr double kSubStep = 0.5;

/// Number of Euler sub-steps used for an interval of length dt.
int euler_substeps(double dt);

StateVec predict_state(const MotionModel& model, const StateVec& state, double dt);

/// Jacobian of predict_state with respect to the state (chained over sub-steps).
StateMat jacobian(const MotionModel& model, const StateVec& state, double dt);

/// First-order discretization G Qc G^T dt of the continuous noise channels
/// (acceleration for pedestrians; speed rate and heading rate for wheeled).
StateMat process_noise_cov(const MotionModel& model, const StateVec& state, double dt);

// Position and velocity of a state in world coordinates regardless of layout.
Eigen::Vector2d position_of(const StateVec& s);
Eigen::Vector2d velocity_of(Dynamics d, const StateVec& s);

// ---------------------------------------------------------------------------
// Measurement models

enum class MeasurementKind {
  Position,      // world-frame east/north position (GPS)
  Radar,         // range, bearing, range rate
  Camera,        // bearing, range [, heading], all relative to ego
  LidarCluster,  // ego-frame forward/left position of a cluster centroid
};

std::string_view to_string(MeasurementKind k);
MeasurementKind parse_measurement_kind(std::string_view name);

struct MeasurementModel {
  MeasurementKind kind = MeasurementKind::Position;
  Eigen::MatrixXd noise_cov;
  bool has_heading = false;  // camera only

  int dim() const;
  /// Entries that are angles and need wrapped residuals.
  std::vector<int> angular_components() const;
  /// Same model with the camera heading row removed.
  MeasurementModel without_heading() const;
  void validate() const;
};

struct MeasurementPrediction {
  Eigen::VectorXd z;
  Eigen::MatrixXd jacobian;  // dim x 4
};

/// Predicted measurement and its Jacobian. Throws NumericError when the object
/// sits on the sensor origin (bearing undefined).
MeasurementPrediction measure(const MeasurementModel& mm, Dynamics dynamics,
                              const StateVec& state, const EgoPose& ego);

// Flat ground-plane camera range: a camera at height h sees the ground contact
// point of an object at range r under depression angle atan(h / r).
double camera_range_from_depression(double depression, double camera_height);
double camera_depression_from_range(double range, double camera_height);
/// First-order range standard deviation induced by a depression-angle error.
double camera_range_sd(double range, double camera_height, double depression_sd);

}  // namespace mmtrack
