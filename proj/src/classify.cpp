#include "mmtrack/classify.hpp"

#include "mmtrack/chi2.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <numeric>

namespace mmtrack {

std::vector<double> clamp_probabilities(std::vector<double> p, double floor) {
  if (p.empty()) return p;
  // A floor that cannot be honored for every entry collapses to uniform.
  if (floor * static_cast<double>(p.size()) >= 1.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (int iter = 0; iter < 8; ++iter) {
    bool changed = false;
    for (double& v : p) {
      if (v < floor) { v = floor; changed = true; }
      if (v > 1.0 - floor) { v = 1.0 - floor; changed = true; }
    }
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= sum;
    if (!changed) break;
  }
  // Entries pinned at the floor stay there; the slack goes to the largest one.
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  *std::max_element(p.begin(), p.end()) += 1.0 - sum;
  return p;
}

ClassPosterior ClassPosterior::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("class posterior needs at least one class");
  return ClassPosterior(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ClassPosterior ClassPosterior::from_weights(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("class posterior needs at least one class");
  std::vector<double> p(weights.begin(), weights.end());
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw std::invalid_argument("class weights must have a positive finite sum");
  for (double& v : p) {
    if (v < 0.0) throw std::invalid_argument("class weights must be non-negative");
    v /= sum;
  }
  return ClassPosterior(clamp_probabilities(std::move(p)));
}

std::size_t ClassPosterior::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double ClassPosterior::max() const { return *std::max_element(probs_.begin(), probs_.end()); }

PosteriorUpdate update_class_posterior_log(const ClassPosterior& prior,
                                           std::span<const double> log_likelihoods,
                                           std::span<const double> forgetting) {
  const std::size_t n = prior.size();
  if (log_likelihoods.size() != n) throw std::invalid_argument("likelihood count != class count");
  if (!forgetting.empty() && forgetting.size() != n)
    throw std::invalid_argument("forgetting factor count != class count");

  std::vector<double> lp(n);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double lambda = forgetting.empty() ? 1.0 : forgetting[j];
    if (std::isnan(log_likelihoods[j]) || log_likelihoods[j] == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("likelihoods must be finite");
    lp[j] = lambda * std::log(prior[j]) + log_likelihoods[j];
    best = std::max(best, lp[j]);
  }
  if (best == -std::numeric_limits<double>::infinity()) return {prior, false};

  std::vector<double> p(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += (p[j] = std::exp(lp[j] - best));
  for (double& v : p) v /= sum;
  return {ClassPosterior::from_weights(p), true};
}

PosteriorUpdate update_class_posterior(const ClassPosterior& prior,
                                       std::span<const double> likelihoods,
                                       std::span<const double> forgetting) {
  std::vector<double> logs(likelihoods.size());
  for (std::size_t j = 0; j < likelihoods.size(); ++j) {
    if (likelihoods[j] < 0.0) throw std::invalid_argument("likelihoods must be non-negative");
    logs[j] = std::log(likelihoods[j]);
  }
  return update_class_posterior_log(prior, logs, forgetting);
}

BatchClassification classify_batch(std::span<const NisAccumulator> accs) {
  if (accs.empty()) throw std::invalid_argument("classify_batch: no classes");
  BatchClassification out;
  for (const auto& acc : accs) {
    const NisSummary s = nis_average(acc);
    out.mean_nis.push_back(s.mean);
    out.log_density.push_back(chi2::log_pdf(acc.sum, s.dof));
  }
  for (std::size_t j = 1; j < out.log_density.size(); ++j)
    if (out.log_density[j] > out.log_density[out.best]) out.best = j;
  return out;
}

HeadingUpdate update_heading(const HeadingBelief& belief, double z_theta, double predicted_theta,
                             double detection_precision) {
  if (!(detection_precision > 0.5 && detection_precision < 1.0))
    throw std::invalid_argument("heading detection precision must lie in (0.5, 1)");
  const double direct = wrap_angle(z_theta - predicted_theta);
  const double reversed = wrap_angle(z_theta + std::numbers::pi - predicted_theta);

  HeadingUpdate out;
  out.belief = belief;
  out.agreed = std::abs(direct) <= std::abs(reversed);
  out.measurement = wrap_angle(out.agreed ? z_theta : z_theta + std::numbers::pi);

  // p(z | H = correct) and p(z | H = reversed)
  const double p_fwd = out.agreed ? detection_precision : 1.0 - detection_precision;
  const double p_rev = 1.0 - p_fwd;
  if (out.agreed) {
    ++out.belief.count_fwd;
  } else {
    ++out.belief.count_rev;
  }
  const double num = p_fwd * belief.posterior_fwd;
  const double post = num / (num + p_rev * (1.0 - belief.posterior_fwd));
  out.belief.posterior_fwd = std::clamp(post, kProbFloor, 1.0 - kProbFloor);
  return out;
}

bool heading_reversed(const HeadingBelief& belief) { return belief.count_rev > belief.count_fwd; }

GaussianBelief flip_heading(const GaussianBelief& belief) {
  GaussianBelief out = belief;
  out.mean[2] = -belief.mean[2];
  out.mean[3] = wrap_angle(belief.mean[3] + std::numbers::pi);
  StateMat j = StateMat::Identity();
  j(2, 2) = -1.0;
  out.cov = j * belief.cov * j.transpose();
  return out;
}

HeadingBelief flip_heading(const HeadingBelief& belief) {
  return {belief.count_rev, belief.count_fwd, 1.0 - belief.posterior_fwd};
}

}  // namespace mmtrack
