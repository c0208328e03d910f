#include "mmtrack/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmtrack {

std::string_view to_string(HeadingMode m) {
  return m == HeadingMode::Split ? "split" : "raw-gaussian";
}

HeadingMode parse_heading_mode(std::string_view name) {
  if (name == "split") return HeadingMode::Split;
  if (name == "raw-gaussian" || name == "raw") return HeadingMode::RawGaussian;
  throw ConfigError("unknown heading mode '" + std::string(name) + "'");
}

double SurveillanceRegion::density(const Measurement& z, HeadingMode mode) const {
  switch (z.kind) {
    case MeasurementKind::Position:
    case MeasurementKind::LidarCluster:
      return 1.0 / (0.5 * bearing_span * max_range * max_range);
    case MeasurementKind::Radar:
      return 1.0 / (max_range * bearing_span * 2.0 * max_range_rate);
    case MeasurementKind::Camera: {
      double d = 1.0 / (bearing_span * max_range);
      if (z.has_heading)
        d /= mode == HeadingMode::Split ? std::numbers::pi : 2.0 * std::numbers::pi;
      return d;
    }
  }
  return 1.0;
}

void TrackerConfig::validate() const {
  if (classes.empty()) throw ConfigError("tracker needs at least one class model");
  for (const auto& m : classes) m.validate();
  if (num_particles < 1) throw ConfigError("particle count must be at least 1");
  if (p_birth < 0.0 || p_clutter < 0.0 || p_birth + p_clutter >= 1.0)
    throw ConfigError("birth and clutter probabilities must be non-negative and sum below 1");
  if (p_birth <= 0.0) throw ConfigError("birth probability must be positive");
  if (!forgetting.empty()) {
    if (forgetting.size() != classes.size())
      throw ConfigError("one forgetting factor per class is required");
    for (double l : forgetting)
      if (!(l > 0.0 && l <= 1.0)) throw ConfigError("forgetting factors must lie in (0, 1]");
  }
  if (max_misses < 0) throw ConfigError("max_misses must be non-negative");
  if (!(gate_probability > 0.0 && gate_probability < 1.0))
    throw ConfigError("gate probability must lie in (0, 1)");
  if (!(raw_heading_sd > 0.0) || !(birth_speed_sd > 0.0) || !(birth_heading_sd > 0.0))
    throw ConfigError("prior standard deviations must be positive");
}

namespace {

struct ClassMeasurement {
  MeasurementModel mm;
  Eigen::VectorXd z;
  double extra_log = 0.0;  // uniform density of components the class cannot predict
};

ClassMeasurement class_measurement(const GaussianBelief& belief, const MotionModel& model,
                                   const Measurement& z, const TrackerConfig& cfg) {
  ClassMeasurement out{z.model(), z.z, 0.0};
  if (z.kind != MeasurementKind::Camera || !z.has_heading) return out;

  if (model.dynamics == Dynamics::ConstantVelocity) {
    out.mm = out.mm.without_heading();
    out.z = z.z.head(2);
    const double domain = cfg.heading_mode == HeadingMode::Split ? std::numbers::pi
                                                                 : 2.0 * std::numbers::pi;
    out.extra_log = -std::log(domain);
    return out;
  }
  if (cfg.heading_mode == HeadingMode::Split) {
    const double predicted = wrap_angle(belief.mean[3] - z.ego.yaw);
    const double flipped = wrap_angle(z.z[2] + std::numbers::pi);
    if (std::abs(wrap_angle(flipped - predicted)) < std::abs(wrap_angle(z.z[2] - predicted)))
      out.z[2] = flipped;
  } else {
    out.mm.noise_cov.row(2).setZero();
    out.mm.noise_cov.col(2).setZero();
    out.mm.noise_cov(2, 2) = cfg.raw_heading_sd * cfg.raw_heading_sd;
  }
  return out;
}

Eigen::Matrix2d rotation(double yaw) {
  Eigen::Matrix2d r;
  r << std::cos(yaw), -std::sin(yaw), std::sin(yaw), std::cos(yaw);
  return r;
}

}  // namespace

double label_log_factor(const Measurement& z, ObjectClass cls, std::size_t n_classes) {
  if (!z.label || n_classes < 2) return 0.0;
  const double p = std::clamp(z.label_precision, kProbFloor, 1.0 - kProbFloor);
  if (*z.label == cls) return std::log(p);
  return std::log((1.0 - p) / static_cast<double>(n_classes - 1));
}

ClassLikelihoods class_likelihoods(const ObjectTrack& track, const Measurement& z,
                                   const TrackerConfig& cfg) {
  const std::size_t n = cfg.classes.size();
  ClassLikelihoods out;
  out.log_lik.assign(n, -std::numeric_limits<double>::infinity());
  out.nis.assign(n, std::numeric_limits<double>::infinity());
  bool any_gated = false;
  for (std::size_t j = 0; j < n; ++j) {
    const MotionModel& model = cfg.classes[j];
    const ClassMeasurement cm = class_measurement(track.bank[j], model, z, cfg);
    try {
      const InnovationRecord rec = innovation(track.bank[j], cm.z, cm.mm, model.dynamics, z.ego);
      out.nis[j] = rec.nis;
      out.log_lik[j] = gaussian_log_density(rec) + cm.extra_log + label_log_factor(z, model.cls, n);
      if (rec.nis <= gate_threshold(cm.mm.dim(), cfg.gate_probability)) any_gated = true;
    } catch (const NumericError&) {
      // degenerate geometry: this class cannot explain the measurement
    }
  }
  out.gated = any_gated;
  return out;
}

void predict_track(ObjectTrack& track, double t, const TrackerConfig& cfg) {
  const double dt = t - track.last_update;
  if (dt < 0.0) throw std::invalid_argument("predict_track: time runs backwards");
  if (dt == 0.0) return;
  for (std::size_t j = 0; j < track.bank.size(); ++j)
    track.bank[j] = kf_predict(track.bank[j], cfg.classes[j], dt);
  track.last_update = t;
}

void update_track(ObjectTrack& track, const Measurement& z, const ClassLikelihoods& lik,
                  const TrackerConfig& cfg) {
  const std::size_t n = cfg.classes.size();
  const bool split_heading = cfg.heading_mode == HeadingMode::Split &&
                             z.kind == MeasurementKind::Camera && z.has_heading;

  // Direction vote against the most probable wheeled filter, before it moves.
  std::optional<std::size_t> lead_wheeled;
  if (split_heading) {
    for (std::size_t j = 0; j < n; ++j) {
      if (cfg.classes[j].dynamics != Dynamics::Unicycle) continue;
      if (!lead_wheeled || track.class_post[j] > track.class_post[*lead_wheeled]) lead_wheeled = j;
    }
    if (lead_wheeled) {
      const double precision = std::clamp(z.heading_precision, 0.5 + 1e-9, 1.0 - 1e-9);
      track.heading = update_heading(track.heading, z.z[2] + z.ego.yaw,
                                     track.bank[*lead_wheeled].mean[3], precision)
                          .belief;
    }
  }

  for (std::size_t j = 0; j < n; ++j) {
    const MotionModel& model = cfg.classes[j];
    const ClassMeasurement cm = class_measurement(track.bank[j], model, z, cfg);
    try {
      track.bank[j] = kf_update(track.bank[j], cm.z, cm.mm, model.dynamics, z.ego).belief;
    } catch (const NumericError&) {
      // leave this filter at its prediction
    }
  }

  if (n > 1) {
    const auto upd = update_class_posterior_log(track.class_post, lik.log_lik, cfg.forgetting);
    track.class_post = upd.posterior;
  }
  if (lead_wheeled && heading_reversed(track.heading)) apply_heading_flip(track, cfg);

  track.miss_count = 0;
  ++track.hits;
  track.last_update = z.t;
}

void apply_heading_flip(ObjectTrack& track, const TrackerConfig& cfg) {
  for (std::size_t j = 0; j < track.bank.size(); ++j)
    if (cfg.classes[j].dynamics == Dynamics::Unicycle) track.bank[j] = flip_heading(track.bank[j]);
  track.heading = flip_heading(track.heading);
}

ObjectTrack make_track(std::uint64_t id, const Measurement& z, const TrackerConfig& cfg) {
  const Eigen::Vector2d ego_pos(z.ego.x, z.ego.y);
  Eigen::Vector2d pos;
  Eigen::Matrix2d pos_cov;
  double radial_speed = 0.0;  // world-frame speed along the line of sight
  bool have_radial = false;

  switch (z.kind) {
    case MeasurementKind::Position:
      pos = z.z.head<2>();
      pos_cov = z.noise_cov.topLeftCorner<2, 2>();
      break;
    case MeasurementKind::LidarCluster: {
      const Eigen::Matrix2d rot = rotation(z.ego.yaw);
      pos = ego_pos + rot * z.z.head<2>();
      pos_cov = rot * z.noise_cov.topLeftCorner<2, 2>() * rot.transpose();
      break;
    }
    case MeasurementKind::Radar:
    case MeasurementKind::Camera: {
      const bool radar = z.kind == MeasurementKind::Radar;
      const double range = radar ? z.z[0] : z.z[1];
      const double bearing = (radar ? z.z[1] : z.z[0]) + z.ego.yaw;
      const Eigen::Vector2d u(std::cos(bearing), std::sin(bearing));
      pos = ego_pos + range * u;
      // d(pos) / d(range, bearing)
      Eigen::Matrix2d j;
      j << u[0], -range * u[1], u[1], range * u[0];
      Eigen::Matrix2d rb;
      const int ir = radar ? 0 : 1;
      const int ib = radar ? 1 : 0;
      rb << z.noise_cov(ir, ir), z.noise_cov(ir, ib), z.noise_cov(ib, ir), z.noise_cov(ib, ib);
      pos_cov = j * rb * j.transpose();
      if (radar) {
        radial_speed = z.z[2] + u.dot(Eigen::Vector2d(z.ego.vx, z.ego.vy));
        have_radial = true;
      }
      break;
    }
  }

  const Eigen::Vector2d los = (pos - ego_pos).norm() > 1e-9 ? Eigen::Vector2d((pos - ego_pos).normalized())
                                                             : Eigen::Vector2d(1.0, 0.0);
  const double s2 = cfg.birth_speed_sd * cfg.birth_speed_sd;

  ObjectTrack track;
  track.id = id;
  track.last_update = z.t;
  track.hits = 1;
  for (const auto& model : cfg.classes) {
    GaussianBelief b;
    b.cov.setZero();
    b.cov.topLeftCorner<2, 2>() = pos_cov;
    b.mean.head<2>() = pos;
    if (model.dynamics == Dynamics::ConstantVelocity) {
      const Eigen::Vector2d v = have_radial ? Eigen::Vector2d(radial_speed * los) : Eigen::Vector2d::Zero();
      b.mean.tail<2>() = v;
      b.cov(2, 2) = s2;
      b.cov(3, 3) = s2;
    } else {
      double theta = std::atan2(los[1], los[0]);
      double theta_var = cfg.birth_heading_sd * cfg.birth_heading_sd;
      double speed = 0.0;
      if (z.kind == MeasurementKind::Camera && z.has_heading) {
        theta = z.z[2] + z.ego.yaw;
        theta_var = cfg.heading_mode == HeadingMode::Split ? z.noise_cov(2, 2)
                                                           : cfg.raw_heading_sd * cfg.raw_heading_sd;
      } else if (have_radial) {
        speed = radial_speed;
      }
      b.mean[2] = speed;
      b.mean[3] = wrap_angle(theta);
      b.cov(2, 2) = s2;
      b.cov(3, 3) = theta_var;
    }
    track.bank.push_back(b);
  }

  const std::size_t n = cfg.classes.size();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = std::exp(label_log_factor(z, cfg.classes[j].cls, n));
  track.class_post = ClassPosterior::from_weights(w);
  return track;
}

double position_variance(const ObjectTrack& track) {
  double v = 0.0;
  for (std::size_t j = 0; j < track.bank.size(); ++j)
    v += track.class_post[j] * (track.bank[j].cov(0, 0) + track.bank[j].cov(1, 1));
  return v;
}

TrackSnapshot snapshot_of(const ObjectTrack& track, const TrackerConfig& cfg) {
  TrackSnapshot s;
  s.id = track.id;
  s.probs = track.class_post.probs();
  const std::size_t best = track.class_post.argmax();
  s.cls = cfg.classes[best].cls;
  for (std::size_t j = 0; j < track.bank.size(); ++j) {
    s.position += track.class_post[j] * position_of(track.bank[j].mean);
    s.velocity += track.class_post[j] * velocity_of(cfg.classes[j].dynamics, track.bank[j].mean);
  }
  const GaussianBelief& b = track.bank[best];
  s.heading = cfg.classes[best].dynamics == Dynamics::Unicycle
                  ? b.mean[3]
                  : std::atan2(s.velocity[1], s.velocity[0]);
  s.cov_diag = b.cov.diagonal();
  s.hits = track.hits;
  return s;
}

}  // namespace mmtrack
