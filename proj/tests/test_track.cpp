#include "mmtrack/track.hpp"

#include <doctest.h>

#include <numbers>

using namespace mmtrack;

namespace {

TrackerConfig two_class_config() {
  TrackerConfig cfg;
  cfg.classes = models_for({ObjectClass::Pedestrian, ObjectClass::Car});
  return cfg;
}

Measurement camera(double t, double bearing, double range, std::optional<double> heading, ObjectClass label,
                   double precision) {
  Measurement z;
  z.t = t;
  z.kind = MeasurementKind::Camera;
  z.has_heading = heading.has_value();
  z.z = heading ? Eigen::VectorXd(Eigen::Vector3d(bearing, range, *heading)) : Eigen::VectorXd(Eigen::Vector2d(bearing, range));
  z.noise_cov = heading ? Eigen::MatrixXd(Eigen::Vector3d(0.0009, 0.25, 0.0225).asDiagonal())
                        : Eigen::MatrixXd(Eigen::Vector2d(0.0009, 0.25).asDiagonal());
  z.label = label;
  z.label_precision = precision;
  z.heading_precision = 0.95;
  return z;
}

Measurement radar(double t, double range, double bearing, double range_rate) {
  Measurement z;
  z.t = t;
  z.kind = MeasurementKind::Radar;
  z.z = Eigen::Vector3d(range, bearing, range_rate);
  z.noise_cov = Eigen::Vector3d(0.25, 0.0025, 0.09).asDiagonal();
  return z;
}

}  // namespace

TEST_CASE("birth from a labelled camera detection weights the classes by the label precision") {
  const auto cfg = two_class_config();
  const ObjectTrack t = make_track(1, camera(0.0, 0.1, 10.0, 0.5, ObjectClass::Car, 0.95), cfg);
  CHECK(t.class_post[1] == doctest::Approx(0.95));
  CHECK(t.class_post[0] == doctest::Approx(0.05));
  CHECK(t.hits == 1);
  CHECK(t.bank[1].mean[3] == doctest::Approx(0.5));
  CHECK(t.bank[1].cov(3, 3) == doctest::Approx(0.0225));
  CHECK(t.bank[0].mean.head<2>().isApprox(Eigen::Vector2d(10.0 * std::cos(0.1), 10.0 * std::sin(0.1))));
}

TEST_CASE("birth from an unlabelled radar return has a uniform class posterior and radial speed") {
  const auto cfg = two_class_config();
  const ObjectTrack t = make_track(4, radar(1.0, 8.0, 0.0, -3.0), cfg);
  CHECK(t.class_post[0] == doctest::Approx(0.5));
  CHECK(t.class_post[1] == doctest::Approx(0.5));
  CHECK(t.bank[0].mean.isApprox(StateVec(8.0, 0.0, -3.0, 0.0)));
  CHECK(t.bank[1].mean[2] == doctest::Approx(-3.0));
  CHECK(t.bank[1].mean[3] == doctest::Approx(0.0));
  // polar noise mapped to the plane
  CHECK(t.bank[0].cov(0, 0) == doctest::Approx(0.25));
  CHECK(t.bank[0].cov(1, 1) == doctest::Approx(64.0 * 0.0025));
}

TEST_CASE("birth position from a lidar cluster is rotated into the world frame") {
  auto cfg = two_class_config();
  Measurement z;
  z.kind = MeasurementKind::LidarCluster;
  z.z = Eigen::Vector2d(4.0, 1.0);
  z.noise_cov = Eigen::Matrix2d::Identity() * 0.09;
  z.ego = {10.0, 5.0, std::numbers::pi / 2.0, 0.0, 0.0};
  const ObjectTrack t = make_track(1, z, cfg);
  CHECK(t.bank[0].mean.head<2>().isApprox(Eigen::Vector2d(9.0, 9.0)));
}

TEST_CASE("label factor") {
  Measurement z;
  CHECK(label_log_factor(z, ObjectClass::Car, 2) == 0.0);
  z.label = ObjectClass::Car;
  z.label_precision = 0.9;
  CHECK(label_log_factor(z, ObjectClass::Car, 2) == doctest::Approx(std::log(0.9)));
  CHECK(label_log_factor(z, ObjectClass::Pedestrian, 2) == doctest::Approx(std::log(0.1)));
  CHECK(label_log_factor(z, ObjectClass::Bus, 4) == doctest::Approx(std::log(0.1 / 3.0)));
  CHECK(label_log_factor(z, ObjectClass::Bus, 1) == 0.0);
}

TEST_CASE("birth and clutter densities are uniform over measurement space") {
  const SurveillanceRegion r;
  Measurement z;
  z.kind = MeasurementKind::Position;
  CHECK(r.density(z, HeadingMode::Split) == doctest::Approx(1.0 / (0.5 * std::numbers::pi * 400.0)));
  z.kind = MeasurementKind::Radar;
  CHECK(r.density(z, HeadingMode::Split) == doctest::Approx(1.0 / (20.0 * std::numbers::pi * 40.0)));
  z = camera(0.0, 0.0, 5.0, 0.1, ObjectClass::Car, 0.9);
  CHECK(r.density(z, HeadingMode::Split) == doctest::Approx(1.0 / (std::numbers::pi * 20.0 * std::numbers::pi)));
  CHECK(r.density(z, HeadingMode::RawGaussian) == doctest::Approx(1.0 / (std::numbers::pi * 20.0 * 2.0 * std::numbers::pi)));
}

TEST_CASE("class likelihoods for a camera heading") {
  const auto cfg = two_class_config();
  ObjectTrack t = make_track(1, camera(0.0, 0.0, 10.0, 0.0, ObjectClass::Car, 0.9), cfg);
  const Measurement fwd = camera(0.0, 0.0, 10.0, 0.05, ObjectClass::Car, 0.9);
  Measurement rev = fwd;
  rev.z[2] = wrap_angle(0.05 + std::numbers::pi);

  const auto lf = class_likelihoods(t, fwd, cfg);
  const auto lr = class_likelihoods(t, rev, cfg);
  // the reversed reading is the same line angle under the split model
  CHECK(lf.log_lik[1] == doctest::Approx(lr.log_lik[1]).epsilon(1e-12));
  CHECK(lf.log_lik[0] == doctest::Approx(lr.log_lik[0]).epsilon(1e-12));
  CHECK(lf.gated);

  // the pedestrian filter ignores the heading row and pays its uniform density
  const MeasurementModel no_heading{MeasurementKind::Camera, fwd.noise_cov.topLeftCorner(2, 2), false};
  const double ped = meas_log_likelihood(t.bank[0], fwd.z.head(2), no_heading, Dynamics::ConstantVelocity) -
                     std::log(std::numbers::pi) + std::log(0.1);
  CHECK(lf.log_lik[0] == doctest::Approx(ped).epsilon(1e-12));

  auto raw = cfg;
  raw.heading_mode = HeadingMode::RawGaussian;
  const auto lraw = class_likelihoods(t, rev, raw);
  CHECK(lraw.log_lik[1] < lf.log_lik[1]);
}

TEST_CASE("far measurements fall outside the gate") {
  const auto cfg = two_class_config();
  const ObjectTrack t = make_track(1, radar(0.0, 10.0, 0.0, 0.0), cfg);
  CHECK_FALSE(class_likelihoods(t, radar(0.0, 18.0, 0.5, 0.0), cfg).gated);
}

TEST_CASE("a majority of reversed camera headings flips the wheeled filters") {
  const auto cfg = two_class_config();
  ObjectTrack t = make_track(1, camera(0.0, 0.0, 10.0, 0.0, ObjectClass::Car, 0.9), cfg);
  t.bank[1].mean[2] = 4.0;
  for (int k = 1; k <= 3; ++k) {
    const double tk = 0.1 * k;
    predict_track(t, tk, cfg);
    const Measurement z = camera(tk, std::atan2(0.0, 10.0 + 0.4 * k), 10.0 + 0.4 * k, std::numbers::pi, ObjectClass::Car, 0.9);
    const auto lik = class_likelihoods(t, z, cfg);
    const Eigen::Vector2d v_before = velocity_of(Dynamics::Unicycle, t.bank[1].mean);
    update_track(t, z, lik, cfg);
    if (k == 1) {
      CHECK(t.heading.count_fwd == 1);
      CHECK(t.heading.count_rev == 0);
      CHECK(t.bank[1].mean[2] < 0.0);
      CHECK(std::abs(wrap_angle(t.bank[1].mean[3] - std::numbers::pi)) < 0.3);
      CHECK((velocity_of(Dynamics::Unicycle, t.bank[1].mean) - v_before).norm() < 1.0);
    }
  }
  CHECK(t.heading.count_fwd == 3);
  CHECK(t.heading.count_rev == 0);
  CHECK(t.hits == 4);
  CHECK(t.miss_count == 0);
}

TEST_CASE("prediction cannot run backwards") {
  const auto cfg = two_class_config();
  ObjectTrack t = make_track(1, radar(2.0, 10.0, 0.0, 0.0), cfg);
  CHECK_THROWS_AS(predict_track(t, 1.0, cfg), std::invalid_argument);
  predict_track(t, 3.0, cfg);
  CHECK(t.last_update == 3.0);
}

TEST_CASE("snapshot mixes class means and reports the MAP class") {
  const auto cfg = two_class_config();
  ObjectTrack t = make_track(1, camera(0.0, 0.0, 10.0, 0.0, ObjectClass::Car, 0.8), cfg);
  t.bank[0].mean = StateVec(10.0, 0.0, 1.0, 0.0);
  t.bank[1].mean = StateVec(11.0, 1.0, 2.0, std::numbers::pi / 2.0);
  const TrackSnapshot s = snapshot_of(t, cfg);
  CHECK(s.cls == ObjectClass::Car);
  CHECK(s.position.isApprox(Eigen::Vector2d(0.2 * 10.0 + 0.8 * 11.0, 0.8)));
  CHECK(s.velocity.x() == doctest::Approx(0.2));
  CHECK(s.velocity.y() == doctest::Approx(1.6));
  CHECK(s.heading == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(position_variance(t) == doctest::Approx(0.2 * (t.bank[0].cov(0, 0) + t.bank[0].cov(1, 1)) +
                                                0.8 * (t.bank[1].cov(0, 0) + t.bank[1].cov(1, 1))));
}

TEST_CASE("tracker configuration validation") {
  auto cfg = two_class_config();
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.classes.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.p_birth = 0.6;
  bad.p_clutter = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.p_birth = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.forgetting = {0.9};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.forgetting = {0.9, 1.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.num_particles = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_heading_mode("raw-gaussian") == HeadingMode::RawGaussian);
  CHECK_THROWS_AS(parse_heading_mode("diagonal"), ConfigError);
}
