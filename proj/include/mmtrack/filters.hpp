#pragma once

#include "mmtrack/models.hpp"

#include <cstddef>

namespace mmtrack {

struct GaussianBelief {
  StateVec mean = StateVec::Zero();
  StateMat cov = StateMat::Identity();
};

/// Innovation of one update: residual, its covariance S and d^2 = r^T S^-1 r.
struct InnovationRecord {
  Eigen::VectorXd residual;
  Eigen::MatrixXd cov;
  double nis = 0.0;
  double log_det = 0.0;  // log|S|, kept for the Gaussian density
};

/// Running sum of d^2 over k updates of an n_z-dimensional measurement.
struct NisAccumulator {
  std::size_t count = 0;
  double sum = 0.0;
  int meas_dim = 2;

  void add(double nis) {
    ++count;
    sum += nis;
  }
};

GaussianBelief kf_predict(const GaussianBelief& belief, const MotionModel& model, double dt);

/// Residual and innovation covariance without modifying the belief.
/// Angular residual components are wrapped to (-pi, pi].
InnovationRecord innovation(const GaussianBelief& belief, const Eigen::VectorXd& z,
                            const MeasurementModel& mm, Dynamics dynamics,
                            const EgoPose& ego = {});

struct UpdateResult {
  GaussianBelief belief;
  InnovationRecord innovation;
};

/// EKF update with a Joseph-form covariance. Throws NumericError when the
/// innovation covariance is not positive definite.
UpdateResult kf_update(const GaussianBelief& belief, const Eigen::VectorXd& z,
                       const MeasurementModel& mm, Dynamics dynamics, const EgoPose& ego = {});

double gaussian_log_density(const InnovationRecord& rec);
double meas_log_likelihood(const GaussianBelief& belief, const Eigen::VectorXd& z,
                           const MeasurementModel& mm, Dynamics dynamics, const EgoPose& ego = {});
double meas_likelihood(const GaussianBelief& belief, const Eigen::VectorXd& z,
                       const MeasurementModel& mm, Dynamics dynamics, const EgoPose& ego = {});

struct NisSummary {
  double mean = 0.0;        // averaged statistic, sum / k
  double percentile = 0.0;  // chi-squared cdf of the sum with k * n_z dof
  double dof = 0.0;
};

NisSummary nis_average(const NisAccumulator& acc);

/// Averaged-statistic value at the given chi-squared percentile:
/// quantile(p, k * n_z) / k.
double nis_percentile_threshold(double p, std::size_t k, int meas_dim);

/// Per-measurement gate on d^2 at the given probability.
double gate_threshold(int meas_dim, double probability);

bool is_positive_semidefinite(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

}  // namespace mmtrack
