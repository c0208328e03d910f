#pragma once

#include "mmtrack/stream_io.hpp"

#include <span>
#include <vector>

namespace mmtrack {

struct EvalOptions {
  double gate = 2.0;                      // m, truth-to-estimate overlap radius
  double max_range = 20.0;                // m, evaluation semicircle
  double fov_half = 1.5707963267948966;   // rad
  double class_floor = 0.95;              // posterior needed to count as classified
  std::vector<ObjectClass> truth_classes;  // empty scores every truth object
};

struct TrackingReport {
  double object_tracked = 0.0;  // fraction of truth ticks with an overlapping estimate
  double range_rms = 0.0;       // m, centroid range difference
  double bearing_rms = 0.0;     // rad
  double correct_class = 0.0;   // fractions of tracked ticks
  double mis_class = 0.0;
  double unclassified = 1.0;
  std::size_t n_returns = 0;    // tracked ticks
  std::size_t truth_ticks = 0;

  // raw sums so reports from several runs can be pooled
  std::size_t n_correct = 0;
  std::size_t n_mis = 0;
  double sum_sq_range = 0.0;
  double sum_sq_bearing = 0.0;

  void finalize();
};

/// Greedy nearest-first matching of truth to estimates per output tick.
TrackingReport score_run(std::span<const TruthSample> truth, std::span<const SnapshotFrame> frames,
                         const EvalOptions& opts = {});

/// Pools raw counts across runs (e.g. seeds) and recomputes the fractions.
TrackingReport combine_reports(std::span<const TrackingReport> reports);

struct CountErrorCdf {
  std::size_t particles = 0;
  std::vector<double> errors;  // per tick |N_est - N_benchmark|
  std::vector<double> sorted;  // ascending errors, the empirical CDF support
  double rms = 0.0;

  /// Fraction of ticks with error <= e.
  double cdf(double e) const;
};

CountErrorCdf make_count_error_cdf(std::size_t particles, std::vector<double> errors);

/// Number of exported tracks per frame, overall and restricted to tracks whose
/// class posterior clears the floor.
struct FrameCounts {
  std::vector<double> overall;
  std::vector<double> classified;
};

FrameCounts count_tracks(std::span<const SnapshotFrame> frames, double class_floor = 0.95);

struct ParticleStudy {
  std::vector<CountErrorCdf> overall;     // one per particle count
  std::vector<CountErrorCdf> classified;
};

/// Replays `stream` with every particle count and compares per-tick object
/// counts with a `benchmark`-particle replay of the same stream. Errors are
/// pooled over the tracker seeds.
ParticleStudy particle_study(std::span<const Measurement> stream, const TrackerConfig& base, std::span<const std::size_t> counts,
                             std::size_t benchmark, std::span<const std::uint64_t> seeds,
                             double output_rate, double t_end, double class_floor = 0.95);

}  // namespace mmtrack
