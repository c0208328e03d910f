#include "mmtrack/filters.hpp"

#include "mmtrack/chi2.hpp"

#include <numbers>

namespace mmtrack {

bool is_positive_semidefinite(const Eigen::MatrixXd& m, double rel_tol) {
  if (!m.allFinite()) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev.minCoeff() >= -rel_tol * scale;
}

GaussianBelief kf_predict(const GaussianBelief& belief, const MotionModel& model, double dt) {
  if (dt < 0.0) throw std::invalid_argument("kf_predict: measurements must be time ordered");
  if (dt == 0.0) return belief;
  const StateMat f = jacobian(model, belief.mean, dt);
  const StateMat q = process_noise_cov(model, belief.mean, dt);
  GaussianBelief out;
  out.mean = predict_state(model, belief.mean, dt);
  out.cov = f * belief.cov * f.transpose() + q;
  out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
  if (!is_positive_semidefinite(out.cov)) throw NumericError("predicted covariance is not PSD");
  return out;
}

InnovationRecord innovation(const GaussianBelief& belief, const Eigen::VectorXd& z,
                            const MeasurementModel& mm, Dynamics dynamics, const EgoPose& ego) {
  if (z.size() != mm.dim()) throw std::invalid_argument("measurement dimension mismatch");
  const MeasurementPrediction pred = measure(mm, dynamics, belief.mean, ego);
  InnovationRecord rec;
  rec.residual = z - pred.z;
  for (int i : mm.angular_components()) rec.residual[i] = wrap_angle(rec.residual[i]);
  rec.cov = pred.jacobian * belief.cov * pred.jacobian.transpose() + mm.noise_cov;
  rec.cov = (0.5 * (rec.cov + rec.cov.transpose())).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(rec.cov);
  if (llt.info() != Eigen::Success) throw NumericError("innovation covariance is singular");
  rec.nis = rec.residual.dot(llt.solve(rec.residual));
  rec.log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return rec;
}

UpdateResult kf_update(const GaussianBelief& belief, const Eigen::VectorXd& z,
                       const MeasurementModel& mm, Dynamics dynamics, const EgoPose& ego) {
  const MeasurementPrediction pred = measure(mm, dynamics, belief.mean, ego);
  UpdateResult out;
  out.innovation = innovation(belief, z, mm, dynamics, ego);
  const Eigen::MatrixXd& h = pred.jacobian;
  const Eigen::MatrixXd pht = belief.cov * h.transpose();
  const Eigen::MatrixXd gain = out.innovation.cov.llt().solve(pht.transpose()).transpose();

  out.belief.mean = belief.mean + gain * out.innovation.residual;
  const StateMat ikh = StateMat::Identity() - gain * h;
  out.belief.cov = ikh * belief.cov * ikh.transpose() + gain * mm.noise_cov * gain.transpose();
  out.belief.cov = (0.5 * (out.belief.cov + out.belief.cov.transpose())).eval();
  if (dynamics == Dynamics::Unicycle) out.belief.mean[3] = wrap_angle(out.belief.mean[3]);
  if (!out.belief.mean.allFinite()) throw NumericError("non-finite state after update");
  return out;
}

double gaussian_log_density(const InnovationRecord& rec) {
  const auto n = static_cast<double>(rec.residual.size());
  return -0.5 * (rec.nis + rec.log_det + n * std::log(2.0 * std::numbers::pi));
}

double meas_log_likelihood(const GaussianBelief& belief, const Eigen::VectorXd& z,
                           const MeasurementModel& mm, Dynamics dynamics, const EgoPose& ego) {
  return gaussian_log_density(innovation(belief, z, mm, dynamics, ego));
}

double meas_likelihood(const GaussianBelief& belief, const Eigen::VectorXd& z,
                       const MeasurementModel& mm, Dynamics dynamics, const EgoPose& ego) {
  return std::exp(meas_log_likelihood(belief, z, mm, dynamics, ego));
}

NisSummary nis_average(const NisAccumulator& acc) {
  if (acc.count == 0) throw std::invalid_argument("nis_average: no measurements accumulated");
  NisSummary s;
  s.mean = acc.sum / static_cast<double>(acc.count);
  s.dof = static_cast<double>(acc.count) * acc.meas_dim;
  s.percentile = chi2::cdf(acc.sum, s.dof);
  return s;
}

double nis_percentile_threshold(double p, std::size_t k, int meas_dim) {
  const double dof = static_cast<double>(k) * meas_dim;
  return chi2::quantile(p, dof) / static_cast<double>(k);
}

double gate_threshold(int meas_dim, double probability) {
  return chi2::quantile(probability, meas_dim);
}

}  // namespace mmtrack
