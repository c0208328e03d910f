#include "mmtrack/sim.hpp"

#include "mmtrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mmtrack {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform(std::mt19937_64& gen, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(gen);
}

double normal(std::mt19937_64& gen, double sd) {
  return sd > 0.0 ? std::normal_distribution<double>(0.0, sd)(gen) : 0.0;
}

bool chance(std::mt19937_64& gen, double p) { return uniform(gen, 0.0, 1.0) < p; }

}  // namespace

// ---------------------------------------------------------------------------
// Monte Carlo tracks

std::pair<double, double> default_speed_range(ObjectClass c) {
  switch (c) {
    case ObjectClass::Pedestrian: return {0.5, 2.0};
    case ObjectClass::Cyclist: return {2.0, 8.0};
    case ObjectClass::Car: return {5.0, 15.0};
    case ObjectClass::Bus: return {5.0, 12.0};
  }
  return {0.0, 1.0};
}

McTrack generate_mc_track(const McTrackConfig& cfg, std::uint64_t seed) {
  if (!(cfg.duration >= 0.0) || !(cfg.rate > 0.0))
    throw std::invalid_argument("MC track needs a non-negative duration and a positive rate");
  std::mt19937_64 gen(rng::key(seed, static_cast<std::uint64_t>(cfg.cls), 0x3c7a11ULL));

  McTrack out;
  out.model = MotionModel::for_class(cfg.cls);
  out.meas_cov = cfg.meas_cov;
  const double accel_sd = out.model.noise.accel_sd * cfg.noise_scale;
  const double rot_sd = deg2rad(out.model.noise.rot_sd_deg.value_or(0.0)) * cfg.noise_scale;

  auto [smin, smax] = default_speed_range(cfg.cls);
  if (cfg.speed_min != 0.0 || cfg.speed_max != 0.0) {
    smin = cfg.speed_min;
    smax = cfg.speed_max;
  }
  const double x0 = uniform(gen, 0.0, cfg.box);
  const double y0 = uniform(gen, 0.0, cfg.box);
  const double speed = smin < smax ? uniform(gen, smin, smax) : smin;
  const double heading = uniform(gen, -kPi, kPi);
  const bool wheeled = out.model.dynamics == Dynamics::Unicycle;
  StateVec state = wheeled ? StateVec(x0, y0, speed, heading)
                           : StateVec(x0, y0, speed * std::cos(heading), speed * std::sin(heading));

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cfg.meas_cov);
  const Eigen::Matrix2d chol = eig.eigenvectors() *
                               eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                               eig.eigenvectors().transpose();
  const double dt = 1.0 / cfg.rate;
  const auto samples = static_cast<std::size_t>(std::floor(cfg.duration * cfg.rate + 1e-9)) + 1;
  double stopped_until = -1.0;
  double resume_speed = 0.0;

  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * dt;
    out.t.push_back(t);
    out.truth.push_back(state);
    const Eigen::Vector2d n(normal(gen, 1.0), normal(gen, 1.0));
    out.z.push_back(position_of(state) + chol * n);
    if (k + 1 == samples) break;

    if (wheeled && cfg.stop_probability > 0.0) {
      if (t < stopped_until) {
        if (t + dt >= stopped_until) state[2] = resume_speed;
        continue;
      }
      if (chance(gen, cfg.stop_probability)) {
        stopped_until = t + uniform(gen, 3.0, 10.0);
        resume_speed = smin < smax ? uniform(gen, smin, smax) : smin;
        state[2] = 0.0;
        continue;
      }
    }

    const int n_sub = euler_substeps(dt);
    const double h = dt / n_sub;
    for (int s = 0; s < n_sub; ++s) {
      state = predict_state(out.model, state, h);
      if (wheeled) {
        state[2] += normal(gen, accel_sd * std::sqrt(h));
        state[3] = wrap_angle(state[3] + normal(gen, rot_sd * std::sqrt(h)));
      } else {
        state[2] += normal(gen, accel_sd * std::sqrt(h));
        state[3] += normal(gen, accel_sd * std::sqrt(h));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

bool Trajectory::active(double t) const {
  return !points.empty() && t >= points.front().t - 1e-9 && t <= points.back().t + 1e-9;
}

Eigen::Vector2d Trajectory::position(double t) const {
  if (points.empty()) return Eigen::Vector2d::Zero();
  if (t <= points.front().t) return {points.front().x, points.front().y};
  if (t >= points.back().t) return {points.back().x, points.back().y};
  const auto it = std::upper_bound(points.begin(), points.end(), t,
                                   [](double v, const Waypoint& w) { return v < w.t; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  const double f = (t - a.t) / (b.t - a.t);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

namespace {

Eigen::Vector2d segment_velocity(const Waypoint& a, const Waypoint& b) {
  const double dt = b.t - a.t;
  if (dt <= 0.0) return Eigen::Vector2d::Zero();
  return {(b.x - a.x) / dt, (b.y - a.y) / dt};
}

std::size_t segment_index(const std::vector<Waypoint>& pts, double t) {
  if (pts.size() < 2) return 0;
  const auto it = std::upper_bound(pts.begin(), pts.end(), t,
                                   [](double v, const Waypoint& w) { return v < w.t; });
  const auto idx = static_cast<std::size_t>(it - pts.begin());
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, pts.size() - 2);
}

}  // namespace

Eigen::Vector2d Trajectory::velocity(double t) const {
  if (points.size() < 2) return Eigen::Vector2d::Zero();
  const std::size_t i = segment_index(points, t);
  return segment_velocity(points[i], points[i + 1]);
}

double Trajectory::heading(double t) const {
  if (points.size() < 2) return 0.0;
  const std::size_t i = segment_index(points, t);
  for (std::size_t j = i + 1; j-- > 0;) {
    const Eigen::Vector2d v = segment_velocity(points[j], points[j + 1]);
    if (v.norm() > 1e-6) return std::atan2(v[1], v[0]);
  }
  for (std::size_t j = i + 1; j + 1 < points.size(); ++j) {
    const Eigen::Vector2d v = segment_velocity(points[j], points[j + 1]);
    if (v.norm() > 1e-6) return std::atan2(v[1], v[0]);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Sensors

std::string_view to_string(SensorKind k) {
  switch (k) {
    case SensorKind::Radar: return "radar";
    case SensorKind::Camera: return "camera";
    case SensorKind::Lidar: return "lidar";
    case SensorKind::Gps: return "gps";
  }
  return "?";
}

SensorKind parse_sensor_kind(std::string_view name) {
  if (name == "radar") return SensorKind::Radar;
  if (name == "camera") return SensorKind::Camera;
  if (name == "lidar" || name == "lidar-cluster") return SensorKind::Lidar;
  if (name == "gps") return SensorKind::Gps;
  throw ConfigError("unknown sensor kind '" + std::string(name) + "'");
}

void SensorSim::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(rate > 0.0)) throw ConfigError("sensor rate must be positive");
  if (!in_unit(vehicle.recall) || !in_unit(vehicle.precision) || !in_unit(person.recall) ||
      !in_unit(person.precision) || !in_unit(heading_precision))
    throw ConfigError("sensor recall and precision must lie in [0, 1]");
  if (!(max_range > 0.0) || !(fov_half > 0.0)) throw ConfigError("sensor field of view must be positive");
  if (clutter_rate < 0.0) throw ConfigError("clutter rate must be non-negative");
  if (!(camera_height > 0.0)) throw ConfigError("camera height must be positive");
  for (double sd : {position_sd, range_sd, bearing_sd, range_rate_sd, depression_sd, heading_sd})
    if (!(sd > 0.0)) throw ConfigError("sensor noise standard deviations must be positive");
}

SensorSim sensor_preset(SensorKind kind, const std::string& weather, int id) {
  if (weather != "sunny" && weather != "night" && weather != "wet_cloudy" && weather != "snow_rain")
    throw ConfigError("unknown weather preset '" + weather + "'");
  SensorSim s;
  s.id = id;
  s.kind = kind;
  switch (kind) {
    case SensorKind::Lidar:
      s.vehicle = {0.91, 0.51, 20.0};
      s.person = {0.88, 0.55, 20.0};
      s.position_sd = 0.3;
      s.clutter_rate = 0.2;
      if (weather == "night") {
        s.vehicle.precision = 0.60;
        s.person.precision = 0.65;
      } else if (weather == "wet_cloudy") {
        s.vehicle.precision = 0.55;
        s.person.precision = 0.60;
        s.position_sd = 0.2;
      } else if (weather == "snow_rain") {
        s.vehicle = {0.86, 0.48, 20.0};
        s.person = {0.82, 0.50, 20.0};
        s.position_sd = 0.35;
        s.clutter_rate = 1.0;
      }
      break;
    case SensorKind::Camera:
      s.vehicle = {0.85, 0.95, 15.0};
      s.person = {0.70, 0.90, 10.0};
      s.bearing_sd = 0.03;
      s.depression_sd = 0.01;
      s.heading_sd = 0.15;
      s.heading_precision = 0.85;
      s.clutter_rate = 0.02;
      if (weather == "night") {
        s.vehicle = {0.55, 0.80, 15.0};
        s.person = {0.45, 0.75, 10.0};
      } else if (weather == "wet_cloudy") {
        s.vehicle.recall = 0.90;
        s.person.recall = 0.75;
        s.bearing_sd = 0.025;
      } else if (weather == "snow_rain") {
        s.vehicle = {0.75, 0.93, 15.0};
        s.person = {0.60, 0.76, 10.0};
        s.bearing_sd = 0.04;
        s.depression_sd = 0.012;
      }
      break;
    case SensorKind::Radar:
      s.vehicle = {0.9, 1.0, 20.0};
      s.person = {0.0, 1.0, 20.0};
      s.detects_persons = false;
      s.emits_labels = false;
      s.range_sd = 0.5;
      s.bearing_sd = 0.05;
      s.range_rate_sd = 0.3;
      s.clutter_rate = 0.05;
      break;
    case SensorKind::Gps:
      s.vehicle = {1.0, 1.0, 1e9};
      s.person = {1.0, 1.0, 1e9};
      s.emits_labels = false;
      s.position_sd = 1.1;
      s.max_range = 1e9;
      s.fov_half = kPi;
      break;
  }
  return s;
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw ConfigError("scenario duration must be positive");
  if (!(output_rate > 0.0)) throw ConfigError("scenario output rate must be positive");
  for (const auto& s : sensors) s.validate();
  auto check_path = [](const Trajectory& p, const std::string& what) {
    for (std::size_t i = 1; i < p.points.size(); ++i)
      if (!(p.points[i].t > p.points[i - 1].t))
        throw ConfigError(what + ": waypoint times must increase strictly");
  };
  check_path(ego, "ego");
  for (const auto& o : objects) {
    if (o.path.points.empty()) throw ConfigError("object " + std::to_string(o.id) + " has no waypoints");
    check_path(o.path, "object " + std::to_string(o.id));
  }
}

EgoPose ego_pose(const Scenario& s, double t) {
  EgoPose pose;
  if (s.ego.points.empty()) return pose;
  const Eigen::Vector2d p = s.ego.position(t);
  const Eigen::Vector2d v = s.ego.active(t) ? s.ego.velocity(t) : Eigen::Vector2d::Zero();
  pose.x = p[0];
  pose.y = p[1];
  pose.yaw = s.ego.heading(t);
  pose.vx = v[0];
  pose.vy = v[1];
  return pose;
}

namespace {

struct ObjectView {
  Eigen::Vector2d position;
  Eigen::Vector2d velocity;
  double heading;
  bool person;
};

ObjectClass other_label(ObjectClass c) {
  return c == ObjectClass::Pedestrian ? ObjectClass::Car : ObjectClass::Pedestrian;
}

Measurement emit(const SensorSim& sensor, const ObjectView& obj, double t, const EgoPose& ego,
                 std::mt19937_64& gen, bool clutter) {
  const Eigen::Vector2d rel = obj.position - Eigen::Vector2d(ego.x, ego.y);
  const double range = rel.norm();
  const double bearing = wrap_angle(std::atan2(rel[1], rel[0]) - ego.yaw);
  const double c = std::cos(ego.yaw), s = std::sin(ego.yaw);
  const DetectionRates& rates = obj.person ? sensor.person : sensor.vehicle;

  Measurement m;
  m.t = t;
  m.sensor_id = sensor.id;
  m.ego = ego;
  if (sensor.emits_labels) {
    const ObjectClass truth_label = obj.person ? ObjectClass::Pedestrian : ObjectClass::Car;
    if (clutter) {
      m.label = chance(gen, 0.5) ? ObjectClass::Car : ObjectClass::Pedestrian;
    } else {
      m.label = chance(gen, rates.precision) ? truth_label : other_label(truth_label);
    }
    m.label_precision = (*m.label == ObjectClass::Car ? sensor.vehicle : sensor.person).precision;
  }

  switch (sensor.kind) {
    case SensorKind::Gps:
      m.kind = MeasurementKind::Position;
      m.z = obj.position + Eigen::Vector2d(normal(gen, sensor.position_sd), normal(gen, sensor.position_sd));
      m.noise_cov = Eigen::Matrix2d::Identity() * sensor.position_sd * sensor.position_sd;
      break;
    case SensorKind::Lidar: {
      m.kind = MeasurementKind::LidarCluster;
      const Eigen::Vector2d local(c * rel[0] + s * rel[1], -s * rel[0] + c * rel[1]);
      m.z = local + Eigen::Vector2d(normal(gen, sensor.position_sd), normal(gen, sensor.position_sd));
      m.noise_cov = Eigen::Matrix2d::Identity() * sensor.position_sd * sensor.position_sd;
      break;
    }
    case SensorKind::Radar: {
      m.kind = MeasurementKind::Radar;
      const Eigen::Vector2d u = rel / std::max(range, 1e-9);
      const double rr = (obj.velocity - Eigen::Vector2d(ego.vx, ego.vy)).dot(u);
      m.z = Eigen::Vector3d(range + normal(gen, sensor.range_sd), wrap_angle(bearing + normal(gen, sensor.bearing_sd)),
                            rr + normal(gen, sensor.range_rate_sd));
      m.noise_cov = Eigen::Vector3d(sensor.range_sd * sensor.range_sd, sensor.bearing_sd * sensor.bearing_sd,
                                    sensor.range_rate_sd * sensor.range_rate_sd)
                        .asDiagonal();
      break;
    }
    case SensorKind::Camera: {
      m.kind = MeasurementKind::Camera;
      double dep = camera_depression_from_range(range, sensor.camera_height) + normal(gen, sensor.depression_sd);
      dep = std::max(dep, 1e-3);
      const double r_meas = camera_range_from_depression(dep, sensor.camera_height);
      const double r_sd = camera_range_sd(r_meas, sensor.camera_height, sensor.depression_sd);
      const double b_meas = wrap_angle(bearing + normal(gen, sensor.bearing_sd));
      m.has_heading = sensor.emits_heading && m.label && *m.label == ObjectClass::Car;
      m.heading_precision = sensor.heading_precision;
      if (m.has_heading) {
        double h = obj.heading - ego.yaw + normal(gen, sensor.heading_sd);
        if (clutter || !chance(gen, sensor.heading_precision)) h += kPi;
        if (clutter) h = uniform(gen, -kPi, kPi);
        m.z = Eigen::Vector3d(b_meas, r_meas, wrap_angle(h));
        m.noise_cov = Eigen::Vector3d(sensor.bearing_sd * sensor.bearing_sd, r_sd * r_sd,
                                      sensor.heading_sd * sensor.heading_sd)
                          .asDiagonal();
      } else {
        m.z = Eigen::Vector2d(b_meas, r_meas);
        m.noise_cov = Eigen::Vector2d(sensor.bearing_sd * sensor.bearing_sd, r_sd * r_sd).asDiagonal();
      }
      break;
    }
  }
  return m;
}

}  // namespace

SimOutput run_scenario(const Scenario& sc) {
  sc.validate();
  SimOutput out;

  for (const auto& sensor : sc.sensors) {
    std::mt19937_64 gen(rng::key(sc.seed, static_cast<std::uint64_t>(sensor.id), 0x5e45012ULL));
    const auto scans = static_cast<long>(std::floor(sc.duration * sensor.rate + 1e-9));
    for (long k = 0; k <= scans; ++k) {
      const double t = static_cast<double>(k) / sensor.rate;
      const EgoPose ego = ego_pose(sc, t);
      for (const auto& obj : sc.objects) {
        if (!obj.path.active(t)) continue;
        const ObjectView view{obj.path.position(t), obj.path.velocity(t), obj.path.heading(t),
                              obj.cls == ObjectClass::Pedestrian};
        const Eigen::Vector2d rel = view.position - Eigen::Vector2d(ego.x, ego.y);
        const double range = rel.norm();
        const double bearing = wrap_angle(std::atan2(rel[1], rel[0]) - ego.yaw);
        if (range > sensor.max_range || std::abs(bearing) > sensor.fov_half) continue;
        if (view.person && !sensor.detects_persons) continue;
        const DetectionRates& rates = view.person ? sensor.person : sensor.vehicle;
        if (range > rates.max_range) continue;
        if (!chance(gen, rates.recall)) continue;
        out.measurements.push_back(emit(sensor, view, t, ego, gen, false));
      }
      if (sensor.clutter_rate > 0.0) {
        const int n_clutter = std::poisson_distribution<int>(sensor.clutter_rate)(gen);
        for (int i = 0; i < n_clutter; ++i) {
          const double r = std::min(sensor.max_range, 20.0) * std::sqrt(uniform(gen, 0.0, 1.0));
          const double b = ego.yaw + uniform(gen, -sensor.fov_half, sensor.fov_half);
          const ObjectView view{Eigen::Vector2d(ego.x + r * std::cos(b), ego.y + r * std::sin(b)),
                                Eigen::Vector2d::Zero(), uniform(gen, -kPi, kPi), false};
          if (r < 0.5) continue;
          out.measurements.push_back(emit(sensor, view, t, ego, gen, true));
        }
      }
    }
  }
  std::stable_sort(out.measurements.begin(), out.measurements.end(),
                   [](const Measurement& a, const Measurement& b) {
                     return a.t != b.t ? a.t < b.t : a.sensor_id < b.sensor_id;
                   });

  const auto ticks = static_cast<long>(std::floor(sc.duration * sc.output_rate + 1e-9));
  for (long k = 0; k <= ticks; ++k) {
    const double t = static_cast<double>(k) / sc.output_rate;
    const EgoPose ego = ego_pose(sc, t);
    for (const auto& obj : sc.objects) {
      if (!obj.path.active(t)) continue;
      out.truth.push_back({t, obj.id, obj.cls, obj.path.position(t), obj.path.velocity(t),
                           obj.path.heading(t), ego});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in scenes

namespace {

std::vector<SensorSim> standard_sensors(const std::string& weather) {
  return {sensor_preset(SensorKind::Camera, weather, 1), sensor_preset(SensorKind::Lidar, weather, 2),
          sensor_preset(SensorKind::Radar, weather, 3)};
}

}  // namespace

Scenario builtin_scenario(char which, const std::string& weather, std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.weather = weather;
  s.sensors = standard_sensors(weather);
  switch (which) {
    case 'A':
    case 'a':
      // Both vehicles stop at the intersection; the truth car continues straight
      // west while the ego turns north behind it.
      s.name = "A";
      s.duration = 20.0;
      s.ego.points = {{0, -30, -2}, {4, -12, -2}, {6, -9, -2}, {13, -9, -2}, {15, -4, -1}, {17, -2, 4}, {20, -2, 16}};
      s.objects.push_back({1, ObjectClass::Car, {{{0, 32, 2}, {4, 14, 2}, {6, 9, 2}, {8, 9, 2}, {10, 2, 2}, {13, -16, 2}, {16, -36, 2}}}});
      break;
    case 'B':
    case 'b':
      // The truth car comes from the north, stops, and crosses in front of the ego.
      s.name = "B";
      s.duration = 20.0;
      s.ego.points = {{0, -30, -2}, {4, -12, -2}, {6, -9, -2}, {20, -9, -2}};
      s.objects.push_back({1, ObjectClass::Car, {{{0, 2, 30}, {4, 2, 13}, {6, 2, 9}, {9, 2, 9}, {11, 2, 3}, {14, 2, -12}, {17, 2, -30}}}});
      break;
    case 'C':
    case 'c':
      // Two pedestrians cross in opposite directions while the ego waits.
      s.name = "C";
      s.duration = 24.0;
      s.ego.points = {{0, -30, -2}, {4, -12, -2}, {6, -9, -2}, {17, -9, -2}, {21, 5, -2}, {24, 20, -2}};
      s.objects.push_back({1, ObjectClass::Pedestrian, {{{1.0, -4.5, 8.0}, {15.0, -4.5, -10.0}}}});
      s.objects.push_back({2, ObjectClass::Pedestrian, {{{1.5, -2.5, -10.0}, {15.5, -2.5, 8.0}}}});
      break;
    default:
      throw ConfigError(std::string("unknown built-in scenario '") + which + "'");
  }
  return s;
}

Scenario cluttered_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "cluttered";
  s.seed = seed;
  s.duration = 30.0;
  s.sensors = standard_sensors("sunny");
  for (auto& sensor : s.sensors)
    if (sensor.kind == SensorKind::Lidar) sensor.clutter_rate = 1.5;
  s.objects.push_back({1, ObjectClass::Car, {{{0, 18, 6}, {10, -2, 6}, {14, -6, 6}, {30, -6.5, 6}}}});
  s.objects.push_back({2, ObjectClass::Car, {{{0, 4, -18}, {8, 4, 0}, {12, 4, 4}, {16, 14, 8}, {30, 28, 8}}}});
  s.objects.push_back({3, ObjectClass::Car, {{{5, 19, -3}, {25, 1, -3}, {30, 1, -3}}}});
  s.objects.push_back({4, ObjectClass::Pedestrian, {{{0, 6, 3}, {30, 8, -12}}}});
  s.objects.push_back({5, ObjectClass::Pedestrian, {{{0, 9, -8}, {30, 6, 10}}}});
  s.objects.push_back({6, ObjectClass::Pedestrian, {{{3, 3, -2}, {20, 12, 0}, {30, 12.5, 0.5}}}});
  return s;
}

void select_sensors(Scenario& s, const std::string& subset) {
  auto letter = [](SensorKind k) {
    switch (k) {
      case SensorKind::Camera: return 'C';
      case SensorKind::Lidar: return 'L';
      case SensorKind::Radar: return 'R';
      case SensorKind::Gps: return 'G';
    }
    return '?';
  };
  std::string upper;
  for (char ch : subset) {
    const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (u == '+' || u == ',' || u == ' ') continue;
    if (u != 'C' && u != 'L' && u != 'R' && u != 'G') throw ConfigError("unknown sensor letter in '" + subset + "'");
    upper.push_back(u);
  }
  if (upper.empty()) throw ConfigError("at least one sensor must be enabled");
  std::erase_if(s.sensors, [&](const SensorSim& sensor) { return upper.find(letter(sensor.kind)) == std::string::npos; });
}

}  // namespace mmtrack
