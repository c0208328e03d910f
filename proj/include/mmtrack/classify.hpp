#pragma once

#include "mmtrack/filters.hpp"

#include <span>
#include <vector>

namespace mmtrack {

/// Probabilities are kept inside [kProbFloor, 1 - kProbFloor] so that a run of
/// bad measurements cannot lock a class at exactly zero or one.
inline constexpr double kProbFloor = 1e-6;

/// Discrete posterior over the n_c classes of a filter bank.
class ClassPosterior {
 public:
  ClassPosterior() = default;
  static ClassPosterior uniform(std::size_t n);
  /// Normalizes, clamps and renormalizes the given weights.
  static ClassPosterior from_weights(std::span<const double> weights);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t argmax() const;
  double max() const;

 private:
  explicit ClassPosterior(std::vector<double> p) : probs_(std::move(p)) {}
  std::vector<double> probs_;
};

/// Clamps each entry to [floor, 1 - floor] and renormalizes until the
/// partition identity holds.
std::vector<double> clamp_probabilities(std::vector<double> p, double floor = kProbFloor);

struct PosteriorUpdate {
  ClassPosterior posterior;
  bool informative = true;  // false when every likelihood was zero
};

/// Recursive Bayes update p_j <- L_j p_j / sum_i L_i p_i in log units.
/// `forgetting` holds an optional per-class exponent lambda in (0, 1] applied to
/// the prior (p_j^lambda); empty means time-invariant classes.
PosteriorUpdate update_class_posterior(const ClassPosterior& prior,
                                       std::span<const double> likelihoods,
                                       std::span<const double> forgetting = {});
PosteriorUpdate update_class_posterior_log(const ClassPosterior& prior,
                                           std::span<const double> log_likelihoods,
                                           std::span<const double> forgetting = {});

struct BatchClassification {
  std::size_t best = 0;
  std::vector<double> mean_nis;     // averaged statistic per class
  std::vector<double> log_density;  // chi-squared log density of each sum
};

/// Picks the class whose summed d^2 is most probable under its chi-squared
/// distribution with k * n_z degrees of freedom. Ties go to the lowest index.
BatchClassification classify_batch(std::span<const NisAccumulator> accs);

// ---------------------------------------------------------------------------
// Heading direction along the vehicle axis

struct HeadingBelief {
  int count_fwd = 0;  // detections agreeing with the tracked direction
  int count_rev = 0;  // detections pointing the other way
  double posterior_fwd = 0.5;
};

struct HeadingUpdate {
  HeadingBelief belief;
  double measurement = 0.0;  // heading to feed the continuous filter
  bool agreed = true;        // false when the reversed reading was closer
};

/// Splits a camera heading into a line angle and a direction bit: picks the
/// closer of z and z + pi to the predicted heading, counts the vote and runs
/// the two-hypothesis Bayes update with p(agree | correct) = precision.
HeadingUpdate update_heading(const HeadingBelief& belief, double z_theta, double predicted_theta,
                             double detection_precision);

/// True when the reversed direction holds the majority of detections.
bool heading_reversed(const HeadingBelief& belief);

/// Flips a wheeled belief end for end: v -> -v, theta -> theta + pi.
/// The map is linear, so the covariance only changes sign on the v row/column.
GaussianBelief flip_heading(const GaussianBelief& belief);

/// Swaps forward/reverse counts after the track has been flipped.
HeadingBelief flip_heading(const HeadingBelief& belief);

}  // namespace mmtrack
