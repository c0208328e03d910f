#pragma once

#include "mmtrack/classify.hpp"
#include "mmtrack/sim.hpp"

#include <vector>

namespace mmtrack {

/// Belief at the first sample from the first two position fixes: position at
/// z0, velocity along z1 - z0.
GaussianBelief two_point_init(const MotionModel& model, const Eigen::Vector2d& z0, const Eigen::Vector2d& z1,
                              double dt, const Eigen::Matrix2d& meas_cov);

struct McTrackResult {
  std::vector<NisAccumulator> nis;  // one per model
  BatchClassification decision;
};

/// Runs one filter per model over the track (updates at samples 1..N) and
/// classifies by the most probable NIS sum.
McTrackResult classify_mc_track(const McTrack& track, const std::vector<MotionModel>& models);

struct McStudyConfig {
  std::vector<ObjectClass> truth_classes;
  std::vector<ObjectClass> model_classes;
  std::size_t iterations = 100;
  std::uint64_t seed = 1;
  McTrackConfig track;  // cls is overwritten per truth class
  double cyclist_stop_probability = 0.0;
};

struct McRow {
  ObjectClass truth = ObjectClass::Pedestrian;
  std::size_t tracks = 0;
  std::vector<double> mean_nis;      // average of the per-track averaged NIS, per model
  std::vector<std::size_t> votes;    // tracks classified as each model

  double fraction(std::size_t model) const {
    return tracks ? static_cast<double>(votes[model]) / static_cast<double>(tracks) : 0.0;
  }
};

struct McReport {
  std::vector<ObjectClass> models;
  std::vector<McRow> rows;
  double seconds = 0.0;

  const McRow& row(ObjectClass truth) const;
  std::size_t model_index(ObjectClass c) const;
};

McReport run_mc_study(const McStudyConfig& cfg);

/// Pedestrian versus cyclist, 100 tracks each, GPS noise.
McStudyConfig person_cyclist_study(std::uint64_t seed = 1);

/// All four classes against all four models with the hand-held GPS noise.
McStudyConfig gps_four_class_study(std::uint64_t seed = 1);

}  // namespace mmtrack
