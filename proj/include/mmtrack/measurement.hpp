#pragma once

#include "mmtrack/models.hpp"

#include <optional>

namespace mmtrack {

/// One timestamped sensor return as consumed by the tracker.
struct Measurement {
  double t = 0.0;
  int sensor_id = 0;
  MeasurementKind kind = MeasurementKind::Position;
  Eigen::VectorXd z;
  Eigen::MatrixXd noise_cov;
  bool has_heading = false;               // camera heading present in z[2]
  std::optional<ObjectClass> label;       // weak class label from the sensor
  double label_precision = 0.5;           // probability the label is right
  double heading_precision = 0.95;        // probability the heading points forward
  EgoPose ego;                            // ego pose at t

  MeasurementModel model() const { return {kind, noise_cov, has_heading}; }
};

}  // namespace mmtrack
