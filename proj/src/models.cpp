#include "mmtrack/models.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace mmtrack {

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Pedestrian: return "pedestrian";
    case ObjectClass::Car: return "car";
    case ObjectClass::Bus: return "bus";
    case ObjectClass::Cyclist: return "cyclist";
  }
  return "unknown";
}

ObjectClass parse_object_class(std::string_view name) {
  if (name == "pedestrian" || name == "person" || name == "ped") return ObjectClass::Pedestrian;
  if (name == "car" || name == "vehicle") return ObjectClass::Car;
  if (name == "bus") return ObjectClass::Bus;
  if (name == "cyclist" || name == "biker" || name == "bike") return ObjectClass::Cyclist;
  throw ConfigError("unknown object class '" + std::string(name) + "'");
}

MotionModel MotionModel::for_class(ObjectClass c) {
  switch (c) {
    case ObjectClass::Pedestrian:
      return {c, Dynamics::ConstantVelocity, {0.04, std::nullopt, c}};
    case ObjectClass::Car:
      return {c, Dynamics::Unicycle, {0.6, 15.0, c}};
    case ObjectClass::Bus:
      return {c, Dynamics::Unicycle, {0.4, 15.0, c}};
    case ObjectClass::Cyclist:
      return {c, Dynamics::Unicycle, {0.31, 15.0, c}};
  }
  throw ConfigError("unknown object class");
}

void MotionModel::validate() const {
  if (!(noise.accel_sd >= 0.0)) throw ConfigError("accel_sd must be non-negative");
  if (dynamics == Dynamics::Unicycle && !(noise.rot_sd_deg && *noise.rot_sd_deg >= 0.0))
    throw ConfigError("wheeled models need a non-negative rotation-rate noise");
}

std::vector<MotionModel> models_for(const std::vector<ObjectClass>& classes) {
  std::vector<MotionModel> out;
  out.reserve(classes.size());
  for (auto c : classes) out.push_back(MotionModel::for_class(c));
  return out;
}

namespace {

void require_finite(const StateVec& s) {
  if (!s.allFinite()) throw NumericError("non-finite object state");
}

StateVec euler_step(Dynamics d, const StateVec& s, double h) {
  StateVec out = s;
  if (d == Dynamics::ConstantVelocity) {
    out[0] += s[2] * h;
    out[1] += s[3] * h;
  } else {
    out[0] += s[2] * std::cos(s[3]) * h;
    out[1] += s[2] * std::sin(s[3]) * h;
    out[3] = wrap_angle(s[3]);
  }
  return out;
}

StateMat step_jacobian(Dynamics d, const StateVec& s, double h) {
  StateMat f = StateMat::Identity();
  if (d == Dynamics::ConstantVelocity) {
    f(0, 2) = h;
    f(1, 3) = h;
  } else {
    const double c = std::cos(s[3]);
    const double sn = std::sin(s[3]);
    f(0, 2) = c * h;
    f(0, 3) = -s[2] * sn * h;
    f(1, 2) = sn * h;
    f(1, 3) = s[2] * c * h;
  }
  return f;
}

StateMat step_noise(const MotionModel& m, double h) {
  StateMat q = StateMat::Zero();
  const double a2 = m.noise.accel_sd * m.noise.accel_sd;
  if (m.dynamics == Dynamics::ConstantVelocity) {
    q(2, 2) = a2 * h;
    q(3, 3) = a2 * h;
  } else {
    const double r = deg2rad(m.noise.rot_sd_deg.value_or(0.0));
    q(2, 2) = a2 * h;
    q(3, 3) = r * r * h;
  }
  return q;
}

}  // namespace

int euler_substeps(double dt) {
  if (dt <= kMaxSingleStep) return 1;
  return static_cast<int>(std::ceil(dt / kSubStep - 1e-12));
}

StateVec predict_state(const MotionModel& model, const StateVec& state, double dt) {
  require_finite(state);
  if (dt < 0.0) throw std::invalid_argument("predict_state: negative time step");
  if (dt == 0.0) return state;
  const int n = euler_substeps(dt);
  const double h = dt / n;
  StateVec s = state;
  for (int i = 0; i < n; ++i) s = euler_step(model.dynamics, s, h);
  return s;
}

StateMat jacobian(const MotionModel& model, const StateVec& state, double dt) {
  require_finite(state);
  if (dt <= 0.0) return StateMat::Identity();
  const int n = euler_substeps(dt);
  const double h = dt / n;
  StateMat f = StateMat::Identity();
  StateVec s = state;
  for (int i = 0; i < n; ++i) {
    f = step_jacobian(model.dynamics, s, h) * f;
    s = euler_step(model.dynamics, s, h);
  }
  return f;
}

StateMat process_noise_cov(const MotionModel& model, const StateVec& state, double dt) {
  if (dt <= 0.0) return StateMat::Zero();
  const int n = euler_substeps(dt);
  const double h = dt / n;
  StateMat q = StateMat::Zero();
  StateVec s = state;
  for (int i = 0; i < n; ++i) {
    const StateMat f = step_jacobian(model.dynamics, s, h);
    q = f * q * f.transpose() + step_noise(model, h);
    s = euler_step(model.dynamics, s, h);
  }
  return 0.5 * (q + q.transpose());
}

Eigen::Vector2d position_of(const StateVec& s) { return s.head<2>(); }

Eigen::Vector2d velocity_of(Dynamics d, const StateVec& s) {
  if (d == Dynamics::ConstantVelocity) return s.tail<2>();
  return {s[2] * std::cos(s[3]), s[2] * std::sin(s[3])};
}

// ---------------------------------------------------------------------------

std::string_view to_string(MeasurementKind k) {
  switch (k) {
    case MeasurementKind::Position: return "position";
    case MeasurementKind::Radar: return "radar";
    case MeasurementKind::Camera: return "camera";
    case MeasurementKind::LidarCluster: return "lidar";
  }
  return "unknown";
}

MeasurementKind parse_measurement_kind(std::string_view name) {
  if (name == "position" || name == "gps") return MeasurementKind::Position;
  if (name == "radar") return MeasurementKind::Radar;
  if (name == "camera") return MeasurementKind::Camera;
  if (name == "lidar" || name == "lidar-cluster") return MeasurementKind::LidarCluster;
  throw ConfigError("unknown measurement kind '" + std::string(name) + "'");
}

int MeasurementModel::dim() const {
  switch (kind) {
    case MeasurementKind::Position:
    case MeasurementKind::LidarCluster: return 2;
    case MeasurementKind::Radar: return 3;
    case MeasurementKind::Camera: return has_heading ? 3 : 2;
  }
  return 0;
}

std::vector<int> MeasurementModel::angular_components() const {
  switch (kind) {
    case MeasurementKind::Radar: return {1};
    case MeasurementKind::Camera: return has_heading ? std::vector<int>{0, 2} : std::vector<int>{0};
    default: return {};
  }
}

MeasurementModel MeasurementModel::without_heading() const {
  if (!has_heading) return *this;
  MeasurementModel out = *this;
  out.has_heading = false;
  out.noise_cov = noise_cov.topLeftCorner(2, 2);
  return out;
}

void MeasurementModel::validate() const {
  const int n = dim();
  if (noise_cov.rows() != n || noise_cov.cols() != n)
    throw ConfigError("measurement noise covariance has the wrong size");
  if (!noise_cov.isApprox(noise_cov.transpose(), 1e-12))
    throw ConfigError("measurement noise covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(noise_cov);
  if (llt.info() != Eigen::Success)
    throw ConfigError("measurement noise covariance must be positive definite");
}

MeasurementPrediction measure(const MeasurementModel& mm, Dynamics dynamics,
                              const StateVec& state, const EgoPose& ego) {
  require_finite(state);
  MeasurementPrediction out;
  const int n = mm.dim();
  out.z.resize(n);
  out.jacobian = Eigen::MatrixXd::Zero(n, 4);

  const double dx = state[0] - ego.x;
  const double dy = state[1] - ego.y;

  if (mm.kind == MeasurementKind::Position) {
    out.z << state[0], state[1];
    out.jacobian(0, 0) = 1.0;
    out.jacobian(1, 1) = 1.0;
    return out;
  }
  if (mm.kind == MeasurementKind::LidarCluster) {
    const double c = std::cos(ego.yaw);
    const double s = std::sin(ego.yaw);
    out.z << c * dx + s * dy, -s * dx + c * dy;
    out.jacobian.block<2, 2>(0, 0) << c, s, -s, c;
    return out;
  }

  const double r2 = dx * dx + dy * dy;
  const double r = std::sqrt(r2);
  if (r < 1e-6) throw NumericError("object coincides with the sensor origin");
  const double bearing = wrap_angle(std::atan2(dy, dx) - ego.yaw);
  const Eigen::RowVector2d dr_dp(dx / r, dy / r);
  const Eigen::RowVector2d db_dp(-dy / r2, dx / r2);

  if (mm.kind == MeasurementKind::Radar) {
    const Eigen::Vector2d vel = velocity_of(dynamics, state);
    const Eigen::Vector2d dv(vel[0] - ego.vx, vel[1] - ego.vy);
    const Eigen::Vector2d dp(dx, dy);
    const double rr = dp.dot(dv) / r;
    out.z << r, bearing, rr;
    out.jacobian.block<1, 2>(0, 0) = dr_dp;
    out.jacobian.block<1, 2>(1, 0) = db_dp;
    out.jacobian.block<1, 2>(2, 0) = (dv / r - dp * (dp.dot(dv) / (r2 * r))).transpose();
    Eigen::Matrix2d dvel;  // d(velocity) / d(state[2..3])
    if (dynamics == Dynamics::ConstantVelocity) {
      dvel.setIdentity();
    } else {
      const double c = std::cos(state[3]);
      const double s = std::sin(state[3]);
      dvel << c, -state[2] * s, s, state[2] * c;
    }
    out.jacobian.block<1, 2>(2, 2) = (dp / r).transpose() * dvel;
    return out;
  }

  // Camera
  out.z[0] = bearing;
  out.z[1] = r;
  out.jacobian.block<1, 2>(0, 0) = db_dp;
  out.jacobian.block<1, 2>(1, 0) = dr_dp;
  if (mm.has_heading) {
    if (dynamics != Dynamics::Unicycle)
      throw std::invalid_argument("camera heading is only defined for wheeled dynamics");
    out.z[2] = wrap_angle(state[3] - ego.yaw);
    out.jacobian(2, 3) = 1.0;
  }
  return out;
}

double camera_range_from_depression(double depression, double camera_height) {
  if (!(depression > 0.0)) throw NumericError("camera ray does not intersect the ground");
  return camera_height / std::tan(depression);
}

double camera_depression_from_range(double range, double camera_height) {
  return std::atan2(camera_height, range);
}

double camera_range_sd(double range, double camera_height, double depression_sd) {
  return depression_sd * (range * range + camera_height * camera_height) / camera_height;
}

}  // namespace mmtrack
