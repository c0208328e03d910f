#include "mmtrack/eval.hpp"

#include "mmtrack/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mmtrack {

void TrackingReport::finalize() {
  object_tracked = truth_ticks ? static_cast<double>(n_returns) / static_cast<double>(truth_ticks) : 0.0;
  if (n_returns == 0) {
    range_rms = bearing_rms = correct_class = mis_class = 0.0;
    unclassified = 1.0;
    return;
  }
  const double n = static_cast<double>(n_returns);
  range_rms = std::sqrt(sum_sq_range / n);
  bearing_rms = std::sqrt(sum_sq_bearing / n);
  correct_class = static_cast<double>(n_correct) / n;
  mis_class = static_cast<double>(n_mis) / n;
  unclassified = static_cast<double>(n_returns - n_correct - n_mis) / n;
}

namespace {

long tick_key(double t) { return std::lround(t * 1e6); }

bool in_region(const Eigen::Vector2d& p, const EgoPose& ego, const EvalOptions& opts) {
  const Eigen::Vector2d rel = p - Eigen::Vector2d(ego.x, ego.y);
  if (rel.norm() > opts.max_range) return false;
  return std::abs(wrap_angle(std::atan2(rel[1], rel[0]) - ego.yaw)) <= opts.fov_half;
}

}  // namespace

TrackingReport score_run(std::span<const TruthSample> truth, std::span<const SnapshotFrame> frames,
                         const EvalOptions& opts) {
  std::map<long, const SnapshotFrame*> by_tick;
  for (const auto& f : frames) by_tick[tick_key(f.t)] = &f;

  std::map<long, std::vector<const TruthSample*>> truth_by_tick;
  for (const auto& s : truth) {
    if (!opts.truth_classes.empty() &&
        std::find(opts.truth_classes.begin(), opts.truth_classes.end(), s.cls) == opts.truth_classes.end())
      continue;
    if (!in_region(s.position, s.ego, opts)) continue;
    truth_by_tick[tick_key(s.t)].push_back(&s);
  }

  TrackingReport rep;
  for (const auto& [key, samples] : truth_by_tick) {
    rep.truth_ticks += samples.size();
    const auto it = by_tick.find(key);
    if (it == by_tick.end()) continue;
    const auto& tracks = it->second->tracks;

    struct Pair {
      double d;
      std::size_t truth, est;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < samples.size(); ++i)
      for (std::size_t j = 0; j < tracks.size(); ++j) {
        const double d = (tracks[j].position - samples[i]->position).norm();
        if (d <= opts.gate) pairs.push_back({d, i, j});
      }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      return a.d != b.d ? a.d < b.d : (a.truth != b.truth ? a.truth < b.truth : a.est < b.est);
    });
    std::vector<bool> truth_used(samples.size(), false), est_used(tracks.size(), false);
    for (const auto& p : pairs) {
      if (truth_used[p.truth] || est_used[p.est]) continue;
      truth_used[p.truth] = est_used[p.est] = true;
      const TruthSample& s = *samples[p.truth];
      const TrackSnapshot& e = tracks[p.est];
      const Eigen::Vector2d ego(s.ego.x, s.ego.y);
      const Eigen::Vector2d rt = s.position - ego, re = e.position - ego;
      const double dr = re.norm() - rt.norm();
      const double db = wrap_angle(std::atan2(re[1], re[0]) - std::atan2(rt[1], rt[0]));
      ++rep.n_returns;
      rep.sum_sq_range += dr * dr;
      rep.sum_sq_bearing += db * db;
      const double confidence = e.probs.empty() ? 0.0 : *std::max_element(e.probs.begin(), e.probs.end());
      if (confidence >= opts.class_floor) {
        if (e.cls == s.cls) {
          ++rep.n_correct;
        } else {
          ++rep.n_mis;
        }
      }
    }
  }
  rep.finalize();
  return rep;
}

TrackingReport combine_reports(std::span<const TrackingReport> reports) {
  TrackingReport out;
  for (const auto& r : reports) {
    out.n_returns += r.n_returns;
    out.truth_ticks += r.truth_ticks;
    out.n_correct += r.n_correct;
    out.n_mis += r.n_mis;
    out.sum_sq_range += r.sum_sq_range;
    out.sum_sq_bearing += r.sum_sq_bearing;
  }
  out.finalize();
  return out;
}

double CountErrorCdf::cdf(double e) const {
  if (sorted.empty()) return 1.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), e);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

CountErrorCdf make_count_error_cdf(std::size_t particles, std::vector<double> errors) {
  CountErrorCdf out;
  out.particles = particles;
  out.errors = std::move(errors);
  out.sorted = out.errors;
  std::sort(out.sorted.begin(), out.sorted.end());
  double ss = 0.0;
  for (double e : out.errors) ss += e * e;
  out.rms = out.errors.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(out.errors.size()));
  return out;
}

FrameCounts count_tracks(std::span<const SnapshotFrame> frames, double class_floor) {
  FrameCounts out;
  for (const auto& f : frames) {
    double classified = 0.0;
    for (const auto& t : f.tracks)
      if (!t.probs.empty() && *std::max_element(t.probs.begin(), t.probs.end()) >= class_floor) classified += 1.0;
    out.overall.push_back(static_cast<double>(f.tracks.size()));
    out.classified.push_back(classified);
  }
  return out;
}

ParticleStudy particle_study(std::span<const Measurement> stream, const TrackerConfig& base,
                             std::span<const std::size_t> counts, std::size_t benchmark,
                             std::span<const std::uint64_t> seeds, double output_rate, double t_end,
                             double class_floor) {
  std::vector<std::vector<double>> overall(counts.size()), classified(counts.size());
  for (std::uint64_t seed : seeds) {
    TrackerConfig cfg = base;
    cfg.seed = seed;
    cfg.num_particles = benchmark;
    const FrameCounts ref = count_tracks(track_stream(cfg, stream, output_rate, t_end), class_floor);
    for (std::size_t c = 0; c < counts.size(); ++c) {
      cfg.num_particles = counts[c];
      const FrameCounts run = count_tracks(track_stream(cfg, stream, output_rate, t_end), class_floor);
      for (std::size_t k = 0; k < ref.overall.size(); ++k) {
        overall[c].push_back(std::abs(run.overall[k] - ref.overall[k]));
        classified[c].push_back(std::abs(run.classified[k] - ref.classified[k]));
      }
    }
  }
  ParticleStudy out;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out.overall.push_back(make_count_error_cdf(counts[c], std::move(overall[c])));
    out.classified.push_back(make_count_error_cdf(counts[c], std::move(classified[c])));
  }
  return out;
}

}  // namespace mmtrack
