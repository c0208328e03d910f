#include "mmtrack/models.hpp"

#include <doctest.h>

#include <random>

using namespace mmtrack;

namespace {

double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

StateMat fd_state_jacobian(const MotionModel& m, const StateVec& s, double dt) {
  StateMat j;
  for (int k = 0; k < 4; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(s[k]));
    StateVec p = s, q = s;
    p[k] += h;
    q[k] -= h;
    StateVec d = predict_state(m, p, dt) - predict_state(m, q, dt);
    if (m.dynamics == Dynamics::Unicycle) d[3] = wrap_angle(d[3]);
    j.col(k) = d / (2.0 * h);
  }
  return j;
}

Eigen::MatrixXd fd_meas_jacobian(const MeasurementModel& mm, Dynamics d, const StateVec& s, const EgoPose& ego) {
  const int n = mm.dim();
  Eigen::MatrixXd j(n, 4);
  const auto angles = mm.angular_components();
  for (int k = 0; k < 4; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(s[k]));
    StateVec p = s, q = s;
    p[k] += h;
    q[k] -= h;
    Eigen::VectorXd diff = measure(mm, d, p, ego).z - measure(mm, d, q, ego).z;
    for (int a : angles) diff[a] = wrap_angle(diff[a]);
    j.col(k) = diff / (2.0 * h);
  }
  return j;
}

// Van Loan: expm([[-A, W], [0, A^T]] dt) = [[., M12], [0, M22]] and Q = M22^T M12.
// A is nilpotent for both linearized models, so the series terminates.
StateMat van_loan_q(const StateMat& a, const StateMat& w, double dt) {
  Eigen::Matrix<double, 8, 8> c = Eigen::Matrix<double, 8, 8>::Zero();
  c.topLeftCorner<4, 4>() = -a * dt;
  c.topRightCorner<4, 4>() = w * dt;
  c.bottomRightCorner<4, 4>() = a.transpose() * dt;
  Eigen::Matrix<double, 8, 8> e = Eigen::Matrix<double, 8, 8>::Identity();
  Eigen::Matrix<double, 8, 8> term = Eigen::Matrix<double, 8, 8>::Identity();
  for (int k = 1; k < 30; ++k) {
    term = term * c / static_cast<double>(k);
    e += term;
  }
  const StateMat m12 = e.topRightCorner<4, 4>();
  const StateMat m22 = e.bottomRightCorner<4, 4>();
  return m22.transpose() * m12;
}

}  // namespace

TEST_CASE("class noise table") {
  const auto ped = MotionModel::for_class(ObjectClass::Pedestrian);
  CHECK(ped.dynamics == Dynamics::ConstantVelocity);
  CHECK(ped.noise.accel_sd == 0.04);
  CHECK_FALSE(ped.noise.rot_sd_deg.has_value());
  CHECK(MotionModel::for_class(ObjectClass::Car).noise.accel_sd == 0.6);
  CHECK(MotionModel::for_class(ObjectClass::Bus).noise.accel_sd == 0.4);
  CHECK(MotionModel::for_class(ObjectClass::Cyclist).noise.accel_sd == 0.31);
  for (auto c : {ObjectClass::Car, ObjectClass::Bus, ObjectClass::Cyclist}) {
    const auto m = MotionModel::for_class(c);
    CHECK(m.dynamics == Dynamics::Unicycle);
    CHECK(*m.noise.rot_sd_deg == 15.0);
  }
}

TEST_CASE("class names round trip and reject unknown names") {
  for (auto c : {ObjectClass::Pedestrian, ObjectClass::Car, ObjectClass::Bus, ObjectClass::Cyclist})
    CHECK(parse_object_class(to_string(c)) == c);
  CHECK(parse_object_class("person") == ObjectClass::Pedestrian);
  CHECK_THROWS_AS(parse_object_class("tram"), ConfigError);
}

TEST_CASE("constant velocity prediction") {
  const auto m = MotionModel::for_class(ObjectClass::Pedestrian);
  const StateVec s = predict_state(m, StateVec(1.0, 2.0, 1.0, -0.5), 2.0);
  CHECK(s.isApprox(StateVec(3.0, 1.0, 1.0, -0.5), 1e-12));
}

TEST_CASE("unicycle heading stays wrapped and speed can be negative") {
  const auto m = MotionModel::for_class(ObjectClass::Car);
  const StateVec s = predict_state(m, StateVec(0.0, 0.0, -2.0, 3.5), 1.0);
  CHECK(s[3] == doctest::Approx(wrap_angle(3.5)));
  CHECK(s[0] == doctest::Approx(-2.0 * std::cos(3.5)));
  CHECK(s[2] == -2.0);
}

TEST_CASE("long intervals are integrated in sub-steps") {
  CHECK(euler_substeps(0.1) == 1);
  CHECK(euler_substeps(1.5) == 1);
  CHECK(euler_substeps(1.6) == 4);
  CHECK(euler_substeps(2.0) == 4);
  CHECK(euler_substeps(3.1) == 7);

  // With sub-steps a constant-speed turn is followed more closely than one big step.
  const auto m = MotionModel::for_class(ObjectClass::Car);
  const StateVec s0(0.0, 0.0, 5.0, 0.3);
  const StateVec big = predict_state(m, s0, 2.0);
  StateVec manual = s0;
  for (int i = 0; i < 4; ++i) manual = predict_state(m, manual, 0.5);
  CHECK(big.isApprox(manual, 1e-12));
}

TEST_CASE("negative time step is rejected") {
  CHECK_THROWS_AS(predict_state(MotionModel::for_class(ObjectClass::Car), StateVec::Zero(), -0.1), std::invalid_argument);
}

TEST_CASE("non-finite state is a numeric error") {
  StateVec s = StateVec::Zero();
  s[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(predict_state(MotionModel::for_class(ObjectClass::Car), s, 0.1), NumericError);
}

TEST_CASE("state Jacobians match finite differences") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> pos(-30.0, 30.0), spd(-12.0, 12.0), ang(-3.1, 3.1);
  for (auto c : {ObjectClass::Pedestrian, ObjectClass::Car}) {
    const auto m = MotionModel::for_class(c);
    for (int trial = 0; trial < 50; ++trial) {
      const StateVec s = c == ObjectClass::Pedestrian ? StateVec(pos(gen), pos(gen), spd(gen), spd(gen))
                                                      : StateVec(pos(gen), pos(gen), spd(gen), ang(gen));
      for (double dt : {0.05, 1.0, 2.7}) {
        CAPTURE(dt);
        CHECK(max_rel_error(jacobian(m, s, dt), fd_state_jacobian(m, s, dt)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("measurement Jacobians match finite differences") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pos(-25.0, 25.0), spd(-10.0, 10.0), ang(-3.1, 3.1);
  const std::vector<MeasurementModel> models{
      {MeasurementKind::Position, Eigen::Matrix2d::Identity(), false},
      {MeasurementKind::LidarCluster, Eigen::Matrix2d::Identity(), false},
      {MeasurementKind::Radar, Eigen::Matrix3d::Identity(), false},
      {MeasurementKind::Camera, Eigen::Matrix2d::Identity(), false},
      {MeasurementKind::Camera, Eigen::Matrix3d::Identity(), true},
  };
  for (int trial = 0; trial < 40; ++trial) {
    const EgoPose ego{pos(gen), pos(gen), ang(gen), spd(gen), spd(gen)};
    for (Dynamics d : {Dynamics::ConstantVelocity, Dynamics::Unicycle}) {
      StateVec s(pos(gen), pos(gen), spd(gen), d == Dynamics::Unicycle ? ang(gen) : spd(gen));
      if ((s.head<2>() - Eigen::Vector2d(ego.x, ego.y)).norm() < 1.0) s[0] += 5.0;
      for (const auto& mm : models) {
        if (mm.has_heading && d != Dynamics::Unicycle) continue;
        CAPTURE(to_string(mm.kind));
        CHECK(max_rel_error(measure(mm, d, s, ego).jacobian, fd_meas_jacobian(mm, d, s, ego)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("radar range rate is the relative velocity along the line of sight") {
  const MeasurementModel mm{MeasurementKind::Radar, Eigen::Matrix3d::Identity(), false};
  EgoPose ego;
  ego.vx = 2.0;
  const auto z = measure(mm, Dynamics::ConstantVelocity, StateVec(10.0, 0.0, -3.0, 4.0), ego);
  CHECK(z.z[0] == doctest::Approx(10.0));
  CHECK(z.z[1] == doctest::Approx(0.0));
  CHECK(z.z[2] == doctest::Approx(-5.0));
}

TEST_CASE("camera and lidar are expressed relative to the ego heading") {
  EgoPose ego{1.0, 1.0, std::numbers::pi / 2.0, 0.0, 0.0};
  const StateVec s(1.0, 6.0, 4.0, std::numbers::pi / 2.0 + 0.2);
  const MeasurementModel cam{MeasurementKind::Camera, Eigen::Matrix3d::Identity(), true};
  const auto zc = measure(cam, Dynamics::Unicycle, s, ego);
  CHECK(zc.z[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zc.z[1] == doctest::Approx(5.0));
  CHECK(zc.z[2] == doctest::Approx(0.2));
  const MeasurementModel lid{MeasurementKind::LidarCluster, Eigen::Matrix2d::Identity(), false};
  const auto zl = measure(lid, Dynamics::Unicycle, s, ego);
  CHECK(zl.z[0] == doctest::Approx(5.0));
  CHECK(zl.z[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("bearing is undefined at the sensor origin") {
  const MeasurementModel mm{MeasurementKind::Radar, Eigen::Matrix3d::Identity(), false};
  CHECK_THROWS_AS(measure(mm, Dynamics::Unicycle, StateVec(0.0, 0.0, 1.0, 0.0), EgoPose{}), NumericError);
}

TEST_CASE("heading rows need wheeled dynamics") {
  const MeasurementModel mm{MeasurementKind::Camera, Eigen::Matrix3d::Identity(), true};
  CHECK_THROWS_AS(measure(mm, Dynamics::ConstantVelocity, StateVec(5.0, 0.0, 1.0, 0.0), EgoPose{}), std::invalid_argument);
  CHECK(mm.without_heading().dim() == 2);
  CHECK(mm.without_heading().noise_cov.rows() == 2);
}

TEST_CASE("measurement model validation") {
  MeasurementModel mm{MeasurementKind::Radar, Eigen::Matrix2d::Identity(), false};
  CHECK_THROWS_AS(mm.validate(), ConfigError);
  mm.noise_cov = -Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(mm.validate(), ConfigError);
  mm.noise_cov = Eigen::Matrix3d::Identity();
  CHECK_NOTHROW(mm.validate());
  CHECK(parse_measurement_kind("gps") == MeasurementKind::Position);
  CHECK_THROWS_AS(parse_measurement_kind("sonar"), ConfigError);
}

TEST_CASE("process noise approaches the exact discretization for short steps") {
  for (auto c : {ObjectClass::Pedestrian, ObjectClass::Car}) {
    const auto m = MotionModel::for_class(c);
    const StateVec s = c == ObjectClass::Pedestrian ? StateVec(0.0, 0.0, 1.0, 0.5) : StateVec(0.0, 0.0, 8.0, 0.7);
    StateMat a = StateMat::Zero();
    StateMat w = StateMat::Zero();
    const double qa = m.noise.accel_sd * m.noise.accel_sd;
    if (c == ObjectClass::Pedestrian) {
      a(0, 2) = a(1, 3) = 1.0;
      w(2, 2) = w(3, 3) = qa;
    } else {
      a(0, 2) = std::cos(s[3]);
      a(0, 3) = -s[2] * std::sin(s[3]);
      a(1, 2) = std::sin(s[3]);
      a(1, 3) = s[2] * std::cos(s[3]);
      const double qr = std::pow(deg2rad(15.0), 2);
      w(2, 2) = qa;
      w(3, 3) = qr;
    }
    double prev = std::numeric_limits<double>::infinity();
    for (double dt : {0.4, 0.1, 0.025}) {
      const StateMat exact = van_loan_q(a, w, dt);
      const StateMat ours = process_noise_cov(m, s, dt);
      // rate channels are integrated exactly
      CHECK(ours(2, 2) == doctest::Approx(exact(2, 2)).epsilon(1e-12));
      CHECK(ours(3, 3) == doctest::Approx(exact(3, 3)).epsilon(1e-12));
      const double err = (ours - exact).norm() / exact.norm();
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 0.05);
  }
}

TEST_CASE("process noise is symmetric positive semidefinite and grows with the interval") {
  const auto m = MotionModel::for_class(ObjectClass::Bus);
  const StateVec s(0.0, 0.0, 6.0, -1.0);
  double last = 0.0;
  for (double dt : {0.1, 0.5, 1.5, 3.0}) {
    const StateMat q = process_noise_cov(m, s, dt);
    CHECK(q.isApprox(q.transpose(), 0.0));
    Eigen::SelfAdjointEigenSolver<StateMat> es(q);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(q.trace() > last);
    last = q.trace();
  }
  CHECK(process_noise_cov(m, s, 0.0).isZero());
}

TEST_CASE("camera ground-plane range model") {
  const double h = 1.8;
  for (double r : {2.0, 10.0, 30.0})
    CHECK(camera_range_from_depression(camera_depression_from_range(r, h), h) == doctest::Approx(r));
  CHECK_THROWS_AS(camera_range_from_depression(-0.01, h), NumericError);
  // first-order propagation against a finite difference of the range
  const double r = 12.0, dd = 1e-7;
  const double d0 = camera_depression_from_range(r, h);
  const double slope = (camera_range_from_depression(d0 - dd, h) - camera_range_from_depression(d0 + dd, h)) / (2 * dd);
  CHECK(camera_range_sd(r, h, 0.01) == doctest::Approx(0.01 * slope).epsilon(1e-6));
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(wrap_angle(7.0) == doctest::Approx(7.0 - 2 * std::numbers::pi));
}
