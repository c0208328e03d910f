#pragma once

#include "mmtrack/track.hpp"

#include <deque>
#include <limits>
#include <span>
#include <stdexcept>

namespace mmtrack {

/// Raised when a measurement is older than the last one processed.
class StaleMeasurement : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssignmentTarget {
  enum class Kind { Track, Birth, Clutter };
  Kind kind = Kind::Clutter;
  std::uint64_t track_id = 0;  // meaningful for Kind::Track only

  static AssignmentTarget track(std::uint64_t id) { return {Kind::Track, id}; }
  static AssignmentTarget birth() { return {Kind::Birth, 0}; }
  static AssignmentTarget clutter() { return {Kind::Clutter, 0}; }
};

struct AssignmentDraw {
  AssignmentTarget target;
  double proposal_prob = 0.0;
};

struct Particle {
  std::vector<ObjectTrack> tracks;
  double weight = 1.0;
  std::uint64_t stream = 0;  // counter-based random stream key
  std::uint64_t next_track_id = 1;
  double last_time = -std::numeric_limits<double>::infinity();
  std::deque<AssignmentDraw> history;  // diagnostics only
};

/// Proposal over the targets of one particle: entries 0..M-1 are the tracks in
/// particle order, followed by birth and clutter.
struct Proposal {
  std::vector<double> probs;
  std::vector<double> log_terms;  // unnormalized log masses, same layout
  std::vector<ClassLikelihoods> likelihoods;  // per track
  double log_alpha = 0.0;

  std::size_t birth_index() const { return probs.size() - 2; }
  std::size_t clutter_index() const { return probs.size() - 1; }
};

double log_sum_exp(std::span<const double> v);

/// Proposal for z; the tracks of the particle must already be predicted to z.t.
Proposal proposal_weights(const Particle& particle, const Measurement& z, const TrackerConfig& cfg);

/// Index into Proposal::probs selected by a uniform variate u in [0, 1).
std::size_t sample_target(const Proposal& proposal, double u);

/// Unnormalized weight after one step.
double update_weight(double w_prev, double alpha);

double effective_sample_size(std::span<const double> weights);

/// Systematic offspring counts for normalized weights and a single offset u in [0, 1).
std::vector<std::size_t> systematic_offspring(std::span<const double> weights, double u);

/// Resamples when the effective sample size falls below cfg.resample_fraction * N.
/// Returns true when resampling happened.
bool resample(std::vector<Particle>& particles, const TrackerConfig& cfg, std::uint64_t step);

/// Applies an assignment draw (update, birth or nothing) and removes dead tracks.
void birth_death_maintenance(Particle& particle, const Measurement& z, const AssignmentDraw& draw,
                             const Proposal& proposal, const TrackerConfig& cfg);

/// Removes tracks whose miss count or position variance exceeds the configured limits.
void remove_dead_tracks(Particle& particle, const TrackerConfig& cfg);

/// Index of the max-weight particle, ties to the lowest index.
std::size_t best_particle(std::span<const Particle> particles);

struct StepInfo {
  double effective_sample_size = 0.0;
  bool resampled = false;
};

class Rbpf {
 public:
  explicit Rbpf(TrackerConfig cfg);

  StepInfo step(const Measurement& z);

  const TrackerConfig& config() const { return cfg_; }
  const std::vector<Particle>& particles() const { return particles_; }
  const Particle& best() const;
  double last_time() const { return last_time_; }
  std::uint64_t steps() const { return step_; }

  /// Tracks of the best particle predicted to time t (t >= last_time()).
  std::vector<TrackSnapshot> snapshot(double t) const;

 private:
  void advance(Particle& p, const Measurement& z, std::uint64_t step) const;

  TrackerConfig cfg_;
  std::vector<Particle> particles_;
  double last_time_ = -std::numeric_limits<double>::infinity();
  std::uint64_t step_ = 0;
};

}  // namespace mmtrack
