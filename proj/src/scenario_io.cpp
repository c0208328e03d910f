#include "mmtrack/scenario_io.hpp"

#include "mmtrack/rng.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace mmtrack {

namespace {

template <typename T>
T get_or(const YAML::Node& node, const char* key, T fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<Waypoint> parse_waypoints(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) throw ConfigError(what + ": waypoints must be a list of [t, x, y]");
  std::vector<Waypoint> out;
  for (const auto& item : node) {
    if (!item.IsSequence() || item.size() != 3) throw ConfigError(what + ": each waypoint needs [t, x, y]");
    try {
      out.push_back({item[0].as<double>(), item[1].as<double>(), item[2].as<double>()});
    } catch (const YAML::Exception&) {
      throw ConfigError(what + ": waypoint values must be numbers");
    }
  }
  return out;
}

// Pedestrian random walk under its own process noise, sampled at 10 Hz.
Trajectory rollout_path(const YAML::Node& node, ObjectClass cls, std::uint64_t seed, int id) {
  const double start = get_or(node, "start", 0.0);
  const double end = get_or(node, "end", start + 10.0);
  if (!(end > start)) throw ConfigError("rollout end must come after start");
  const MotionModel model = MotionModel::for_class(cls);
  const double heading = get_or(node, "heading", 0.0);
  const double speed = get_or(node, "speed", 1.0);
  StateVec s = model.dynamics == Dynamics::Unicycle
                   ? StateVec(get_or(node, "x", 0.0), get_or(node, "y", 0.0), speed, heading)
                   : StateVec(get_or(node, "x", 0.0), get_or(node, "y", 0.0), speed * std::cos(heading),
                              speed * std::sin(heading));
  std::mt19937_64 gen(rng::key(seed, static_cast<std::uint64_t>(id), 0x0a11ULL));
  std::normal_distribution<double> n01(0.0, 1.0);
  const double dt = 0.1;
  const double sa = model.noise.accel_sd * std::sqrt(dt);
  const double sr = deg2rad(model.noise.rot_sd_deg.value_or(0.0)) * std::sqrt(dt);
  Trajectory path;
  const auto steps = static_cast<long>(std::floor((end - start) / dt + 1e-9));
  for (long k = 0; k <= steps; ++k) {
    path.points.push_back({start + static_cast<double>(k) * dt, s[0], s[1]});
    s = predict_state(model, s, dt);
    if (model.dynamics == Dynamics::Unicycle) {
      s[2] += sa * n01(gen);
      s[3] = wrap_angle(s[3] + sr * n01(gen));
    } else {
      s[2] += sa * n01(gen);
      s[3] += sa * n01(gen);
    }
  }
  return path;
}

void apply_rates(const YAML::Node& node, DetectionRates& r) {
  if (!node) return;
  r.recall = get_or(node, "recall", r.recall);
  r.precision = get_or(node, "precision", r.precision);
  r.max_range = get_or(node, "max_range", r.max_range);
}

SensorSim parse_sensor(const YAML::Node& node, const std::string& weather, int fallback_id) {
  const std::string kind = get_or<std::string>(node, "kind", "");
  if (kind.empty()) throw ConfigError("sensor entry needs a kind");
  SensorSim s = sensor_preset(parse_sensor_kind(kind), get_or<std::string>(node, "preset", weather),
                              get_or(node, "id", fallback_id));
  s.rate = get_or(node, "rate", s.rate);
  s.clutter_rate = get_or(node, "clutter_rate", s.clutter_rate);
  s.max_range = get_or(node, "max_range", s.max_range);
  s.fov_half = get_or(node, "fov_half", s.fov_half);
  s.heading_precision = get_or(node, "heading_precision", s.heading_precision);
  s.emits_heading = get_or(node, "emits_heading", s.emits_heading);
  s.camera_height = get_or(node, "camera_height", s.camera_height);
  apply_rates(node["vehicle"], s.vehicle);
  apply_rates(node["person"], s.person);
  if (const YAML::Node noise = node["noise"]) {
    s.position_sd = get_or(noise, "position_sd", s.position_sd);
    s.range_sd = get_or(noise, "range_sd", s.range_sd);
    s.bearing_sd = get_or(noise, "bearing_sd", s.bearing_sd);
    s.range_rate_sd = get_or(noise, "range_rate_sd", s.range_rate_sd);
    s.depression_sd = get_or(noise, "depression_sd", s.depression_sd);
    s.heading_sd = get_or(noise, "heading_sd", s.heading_sd);
  }
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("scenario must be a YAML mapping");

  const std::string weather = get_or<std::string>(root, "weather", "sunny");
  const auto seed = get_or<std::uint64_t>(root, "seed", 1);
  Scenario s;
  if (const YAML::Node b = root["builtin"]) {
    const std::string which = b.as<std::string>();
    if (which == "cluttered") {
      s = cluttered_scenario(seed);
    } else if (which.size() == 1) {
      s = builtin_scenario(which[0], weather, seed);
    } else {
      throw ConfigError("builtin must be one of A, B, C, cluttered");
    }
  }
  s.seed = seed;
  s.weather = weather;
  s.name = get_or(root, "name", s.name);
  s.duration = get_or(root, "duration", s.duration);
  s.output_rate = get_or(root, "output_rate", s.output_rate);
  if (const YAML::Node ego = root["ego"]) s.ego.points = parse_waypoints(ego, "ego");

  if (const YAML::Node objs = root["objects"]) {
    if (!objs.IsSequence()) throw ConfigError("objects must be a list");
    s.objects.clear();
    int next_id = 1;
    for (const auto& o : objs) {
      TruthObject obj;
      obj.id = get_or(o, "id", next_id);
      next_id = obj.id + 1;
      obj.cls = parse_object_class(get_or<std::string>(o, "class", "car"));
      if (o["waypoints"]) {
        obj.path.points = parse_waypoints(o["waypoints"], "object " + std::to_string(obj.id));
      } else if (o["rollout"]) {
        obj.path = rollout_path(o["rollout"], obj.cls, seed, obj.id);
      } else {
        throw ConfigError("object " + std::to_string(obj.id) + " needs waypoints or a rollout");
      }
      s.objects.push_back(std::move(obj));
    }
  }

  if (const YAML::Node sensors = root["sensors"]) {
    if (!sensors.IsSequence()) throw ConfigError("sensors must be a list");
    s.sensors.clear();
    int next_id = 1;
    for (const auto& node : sensors) {
      s.sensors.push_back(parse_sensor(node, weather, next_id));
      next_id = s.sensors.back().id + 1;
    }
  } else if (s.sensors.empty()) {
    s.sensors = {sensor_preset(SensorKind::Camera, weather, 1), sensor_preset(SensorKind::Lidar, weather, 2),
                 sensor_preset(SensorKind::Radar, weather, 3)};
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace mmtrack
