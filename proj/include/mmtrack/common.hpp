#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmtrack {

// All object states are 4-vectors; the layout depends on the dynamics:
// constant velocity [x1 x2 v1 v2], unicycle [x1 x2 v theta].
using StateVec = Eigen::Vector4d;
using StateMat = Eigen::Matrix4d;

enum class ObjectClass { Pedestrian, Car, Bus, Cyclist };

std::string_view to_string(ObjectClass c);
ObjectClass parse_object_class(std::string_view name);

/// Bad configuration or input data. The CLI maps this to its usage exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown (non-finite state, singular innovation covariance, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  if (w > std::numbers::pi) w -= two_pi;
  return w;
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Pose and velocity of the ego vehicle in the world (east/north) frame.
struct EgoPose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

}  // namespace mmtrack
