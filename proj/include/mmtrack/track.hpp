#pragma once

#include "mmtrack/classify.hpp"
#include "mmtrack/measurement.hpp"

#include <cstdint>
#include <vector>

namespace mmtrack {

enum class HeadingMode {
  Split,        // line angle in the filter, direction bit counted separately
  RawGaussian,  // heading used as-is with a wide Gaussian
};

std::string_view to_string(HeadingMode m);
HeadingMode parse_heading_mode(std::string_view name);

/// Region in which births and clutter are spread uniformly; sets the
/// measurement-space densities of the birth and clutter pseudo-targets.
struct SurveillanceRegion {
  double max_range = 20.0;                  // m
  double bearing_span = 3.141592653589793;  // rad, front half-plane
  double max_range_rate = 20.0;             // m/s, radar range-rate interval is +-this

  /// Uniform density over measurement space for the given measurement.
  double density(const Measurement& z, HeadingMode mode) const;
};

struct TrackerConfig {
  std::vector<MotionModel> classes;
  std::size_t num_particles = 8;

  double p_birth = 0.05;
  double p_clutter = 0.02;
  SurveillanceRegion region;

  int max_misses = 15;                  // predict cycles without an assignment
  double max_position_variance = 400.0;  // m^2, trace of the position block

  bool gating = false;
  double gate_probability = 0.997;

  HeadingMode heading_mode = HeadingMode::Split;
  double raw_heading_sd = 1.0;  // rad, heading noise used in raw-gaussian mode

  double birth_speed_sd = 3.0;  // m/s, velocity prior at birth
  double birth_heading_sd = 1.5;  // rad, wheeled heading prior without a heading reading

  std::vector<double> forgetting;  // optional per-class lambda in (0, 1]
  double resample_fraction = 0.5;  // resample when N_eff < fraction * N
  std::size_t history_length = 32;
  int confirm_hits = 3;  // assignments before a track is exported
  std::uint64_t seed = 1;

  void validate() const;
};

struct ObjectTrack {
  std::uint64_t id = 0;
  std::vector<GaussianBelief> bank;  // one belief per class, class-specific layout
  ClassPosterior class_post;
  HeadingBelief heading;
  double last_update = 0.0;
  int miss_count = 0;
  int hits = 0;  // number of assigned measurements so far
};

/// Per-class evidence of one measurement against one track.
struct ClassLikelihoods {
  std::vector<double> log_lik;  // log p(z | class j), including the label term
  std::vector<double> nis;
  bool gated = true;  // inside the per-measurement gate of at least one class
};

ClassLikelihoods class_likelihoods(const ObjectTrack& track, const Measurement& z,
                                   const TrackerConfig& cfg);

/// Log of the label factor p(label | class j); zero without a label.
double label_log_factor(const Measurement& z, ObjectClass cls, std::size_t n_classes);

/// Predicts every filter of the bank to time t.
void predict_track(ObjectTrack& track, double t, const TrackerConfig& cfg);

/// Updates every filter of the bank with z and the class posterior with the
/// given likelihoods; handles the split heading and the direction flip.
void update_track(ObjectTrack& track, const Measurement& z, const ClassLikelihoods& lik,
                  const TrackerConfig& cfg);

/// New track initialized from a single measurement.
ObjectTrack make_track(std::uint64_t id, const Measurement& z, const TrackerConfig& cfg);

/// Flips every wheeled belief of the bank end for end and swaps the heading counts.
void apply_heading_flip(ObjectTrack& track, const TrackerConfig& cfg);

/// Class-posterior weighted position variance (trace of the 2x2 block).
double position_variance(const ObjectTrack& track);

struct TrackSnapshot {
  std::uint64_t id = 0;
  ObjectClass cls = ObjectClass::Pedestrian;
  std::vector<double> probs;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double heading = 0.0;
  Eigen::Vector4d cov_diag = Eigen::Vector4d::Zero();
  int hits = 0;
};

TrackSnapshot snapshot_of(const ObjectTrack& track, const TrackerConfig& cfg);

}  // namespace mmtrack
