#include "mmtrack/mc_study.hpp"

#include "mmtrack/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace mmtrack {

GaussianBelief two_point_init(const MotionModel& model, const Eigen::Vector2d& z0, const Eigen::Vector2d& z1,
                              double dt, const Eigen::Matrix2d& meas_cov) {
  if (!(dt > 0.0)) throw std::invalid_argument("two_point_init: dt must be positive");
  const Eigen::Vector2d d = z1 - z0;
  GaussianBelief b;
  b.cov.setZero();
  b.mean.head<2>() = z0;
  b.cov.topLeftCorner<2, 2>() = meas_cov;
  // velocity = (z1 - z0) / dt has covariance 2R / dt^2 and correlates with z0
  const Eigen::Matrix2d vel_cov = 2.0 * meas_cov / (dt * dt);
  const Eigen::Matrix2d cross = -meas_cov / dt;
  if (model.dynamics == Dynamics::ConstantVelocity) {
    b.mean.tail<2>() = d / dt;
    b.cov.bottomRightCorner<2, 2>() = vel_cov;
    b.cov.topRightCorner<2, 2>() = cross;
    b.cov.bottomLeftCorner<2, 2>() = cross.transpose();
  } else {
    const double speed = d.norm() / dt;
    const double theta = std::atan2(d[1], d[0]);
    b.mean[2] = speed;
    b.mean[3] = theta;
    // polar form of the velocity covariance: J = d(v, theta)/d(vx, vy)
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    if (speed > 1e-6) {
      j << std::cos(theta), std::sin(theta), -std::sin(theta) / speed, std::cos(theta) / speed;
      Eigen::Matrix2d polar = j * vel_cov * j.transpose();
      const double max_theta_var = std::pow(std::numbers::pi / 2.0, 2);
      if (polar(1, 1) > max_theta_var) {
        polar(0, 1) = polar(1, 0) = polar(0, 1) * std::sqrt(max_theta_var / polar(1, 1));
        polar(1, 1) = max_theta_var;
      }
      b.cov.bottomRightCorner<2, 2>() = polar;
      const Eigen::Matrix2d c = cross * j.transpose();
      b.cov.topRightCorner<2, 2>() = c;
      b.cov.bottomLeftCorner<2, 2>() = c.transpose();
    } else {
      b.cov(2, 2) = vel_cov.trace() / 2.0;
      b.cov(3, 3) = std::pow(std::numbers::pi / 2.0, 2);
    }
  }
  b.cov = 0.5 * (b.cov + b.cov.transpose()).eval();
  if (!is_positive_semidefinite(b.cov)) {
    // keep only the diagonal if the correlated form lost definiteness
    const StateVec diag = b.cov.diagonal();
    b.cov = diag.asDiagonal();
  }
  return b;
}

McTrackResult classify_mc_track(const McTrack& track, const std::vector<MotionModel>& models) {
  if (track.z.size() < 2) throw std::invalid_argument("MC track needs at least two samples");
  const MeasurementModel mm{MeasurementKind::Position, track.meas_cov, false};
  McTrackResult out;
  for (const auto& model : models) {
    NisAccumulator acc;
    acc.meas_dim = 2;
    GaussianBelief b = two_point_init(model, track.z[0], track.z[1], track.t[1] - track.t[0], track.meas_cov);
    for (std::size_t k = 1; k < track.z.size(); ++k) {
      b = kf_predict(b, model, track.t[k] - track.t[k - 1]);
      const UpdateResult u = kf_update(b, track.z[k], mm, model.dynamics);
      acc.add(u.innovation.nis);
      b = u.belief;
    }
    out.nis.push_back(acc);
  }
  out.decision = classify_batch(out.nis);
  return out;
}

const McRow& McReport::row(ObjectClass truth) const {
  for (const auto& r : rows)
    if (r.truth == truth) return r;
  throw std::out_of_range("no MC row for class " + std::string(to_string(truth)));
}

std::size_t McReport::model_index(ObjectClass c) const {
  for (std::size_t i = 0; i < models.size(); ++i)
    if (models[i] == c) return i;
  throw std::out_of_range("class " + std::string(to_string(c)) + " is not a model of this study");
}

McReport run_mc_study(const McStudyConfig& cfg) {
  if (cfg.model_classes.empty()) throw ConfigError("MC study needs at least one model class");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<MotionModel> models = models_for(cfg.model_classes);
  McReport report;
  report.models = cfg.model_classes;
  for (ObjectClass truth : cfg.truth_classes) {
    McRow row;
    row.truth = truth;
    row.mean_nis.assign(models.size(), 0.0);
    row.votes.assign(models.size(), 0);
    McTrackConfig tc = cfg.track;
    tc.cls = truth;
    if (truth == ObjectClass::Cyclist) tc.stop_probability = cfg.cyclist_stop_probability;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      const McTrack track = generate_mc_track(tc, rng::key(cfg.seed, static_cast<std::uint64_t>(truth), it));
      const McTrackResult res = classify_mc_track(track, models);
      for (std::size_t m = 0; m < models.size(); ++m) row.mean_nis[m] += res.decision.mean_nis[m];
      ++row.votes[res.decision.best];
      ++row.tracks;
    }
    if (row.tracks)
      for (double& v : row.mean_nis) v /= static_cast<double>(row.tracks);
    report.rows.push_back(std::move(row));
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

McStudyConfig person_cyclist_study(std::uint64_t seed) {
  McStudyConfig cfg;
  cfg.truth_classes = {ObjectClass::Cyclist, ObjectClass::Pedestrian};
  cfg.model_classes = {ObjectClass::Cyclist, ObjectClass::Pedestrian};
  cfg.seed = seed;
  return cfg;
}

McStudyConfig gps_four_class_study(std::uint64_t seed) {
  McStudyConfig cfg;
  cfg.truth_classes = {ObjectClass::Pedestrian, ObjectClass::Car, ObjectClass::Bus, ObjectClass::Cyclist};
  cfg.model_classes = {ObjectClass::Pedestrian, ObjectClass::Car, ObjectClass::Bus, ObjectClass::Cyclist};
  cfg.seed = seed;
  return cfg;
}

}  // namespace mmtrack
