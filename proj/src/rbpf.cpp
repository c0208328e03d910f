#include "mmtrack/rbpf.hpp"

#include "mmtrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmtrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kInitSalt = 0x51a7e0c1d2b3a495ULL;
constexpr std::uint64_t kResampleSalt = 0x7e5a3b11c0ffee00ULL;

std::vector<std::size_t> key_order(const std::vector<Particle>& particles) {
  std::vector<std::size_t> order(particles.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return particles[a].stream < particles[b].stream;
  });
  return order;
}

}  // namespace

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Proposal proposal_weights(const Particle& particle, const Measurement& z, const TrackerConfig& cfg) {
  const std::size_t m_count = particle.tracks.size();
  const std::size_t n = cfg.classes.size();
  Proposal out;
  out.log_terms.assign(m_count + 2, kNegInf);
  out.likelihoods.reserve(m_count);

  bool any_gated = false;
  for (const auto& track : particle.tracks) {
    out.likelihoods.push_back(class_likelihoods(track, z, cfg));
    any_gated = any_gated || out.likelihoods.back().gated;
  }
  const bool gate_active = cfg.gating && any_gated;

  const double log_track_share =
      m_count > 0 ? std::log((1.0 - cfg.p_birth - cfg.p_clutter) / static_cast<double>(m_count)) : kNegInf;
  std::vector<double> mix(n);
  for (std::size_t m = 0; m < m_count; ++m) {
    const ClassLikelihoods& lik = out.likelihoods[m];
    if (gate_active && !lik.gated) continue;
    for (std::size_t j = 0; j < n; ++j)
      mix[j] = std::log(particle.tracks[m].class_post[j]) + lik.log_lik[j];
    out.log_terms[m] = log_track_share + log_sum_exp(mix);
  }

  // Birth and clutter spread uniformly over measurement space; a weak label is
  // uninformative once the class is marginalized under a uniform class prior.
  const double log_kappa = std::log(cfg.region.density(z, cfg.heading_mode));
  const double log_label = (z.label && n > 1) ? -std::log(static_cast<double>(n)) : 0.0;
  const double log_birth = std::log(cfg.p_birth) + log_kappa + log_label;
  const double log_clutter =
      cfg.p_clutter > 0.0 ? std::log(cfg.p_clutter) + log_kappa + log_label : kNegInf;
  if (!gate_active) {
    out.log_terms[m_count] = log_birth;
    out.log_terms[m_count + 1] = log_clutter;
  }

  double log_z = log_sum_exp(out.log_terms);
  out.probs.assign(m_count + 2, 0.0);
  if (m_count == 0) {
    // Nothing to explain the return yet: it starts a track.
    out.probs[0] = 1.0;
    out.log_alpha = -log_z;
    return out;
  }
  if (log_z == kNegInf || !std::isfinite(log_z)) {
    const double pb = cfg.p_birth / (cfg.p_birth + cfg.p_clutter);
    out.probs[m_count] = pb;
    out.probs[m_count + 1] = 1.0 - pb;
    out.log_alpha = 0.0;
    return out;
  }
  for (std::size_t k = 0; k < out.probs.size(); ++k) out.probs[k] = std::exp(out.log_terms[k] - log_z);
  out.log_alpha = -log_z;
  return out;
}

std::size_t sample_target(const Proposal& proposal, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < proposal.probs.size(); ++k) {
    if (proposal.probs[k] <= 0.0) continue;
    acc += proposal.probs[k];
    last = k;
    if (u < acc) return k;
  }
  return last;
}

double update_weight(double w_prev, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("update_weight: alpha must be positive");
  return w_prev / alpha;
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return s > 0.0 ? 1.0 / s : 0.0;
}

std::vector<std::size_t> systematic_offspring(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> counts(n, 0);
  if (n == 0) return counts;
  double cum = 0.0;
  std::size_t drawn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += weights[i];
    const double edge = (i + 1 == n) ? static_cast<double>(n) : cum * static_cast<double>(n);
    while (drawn < n && static_cast<double>(drawn) + u < edge) {
      ++counts[i];
      ++drawn;
    }
  }
  return counts;
}

bool resample(std::vector<Particle>& particles, const TrackerConfig& cfg, std::uint64_t step) {
  const std::size_t n = particles.size();
  const std::vector<std::size_t> order = key_order(particles);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = particles[order[i]].weight;
  if (effective_sample_size(w) >= cfg.resample_fraction * static_cast<double>(n)) return false;

  const double u = rng::unit(rng::key(cfg.seed, step, kResampleSalt));
  const std::vector<std::size_t> counts = systematic_offspring(w, u);
  std::vector<Particle> next;
  next.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Particle& parent = particles[order[i]];
    for (std::size_t c = 0; c < counts[i]; ++c) {
      Particle child = parent;
      child.stream = rng::key(parent.stream, step, c);
      child.weight = 1.0 / static_cast<double>(n);
      next.push_back(std::move(child));
    }
  }
  particles = std::move(next);
  return true;
}

void remove_dead_tracks(Particle& particle, const TrackerConfig& cfg) {
  std::erase_if(particle.tracks, [&](const ObjectTrack& t) {
    return t.miss_count > cfg.max_misses || position_variance(t) > cfg.max_position_variance;
  });
}

void birth_death_maintenance(Particle& particle, const Measurement& z, const AssignmentDraw& draw,
                             const Proposal& proposal, const TrackerConfig& cfg) {
  switch (draw.target.kind) {
    case AssignmentTarget::Kind::Track: {
      auto it = std::find_if(particle.tracks.begin(), particle.tracks.end(),
                             [&](const ObjectTrack& t) { return t.id == draw.target.track_id; });
      if (it == particle.tracks.end()) throw std::invalid_argument("assignment to unknown track");
      const auto m = static_cast<std::size_t>(it - particle.tracks.begin());
      update_track(*it, z, proposal.likelihoods.at(m), cfg);
      break;
    }
    case AssignmentTarget::Kind::Birth:
      particle.tracks.push_back(make_track(particle.next_track_id++, z, cfg));
      break;
    case AssignmentTarget::Kind::Clutter:
      break;
  }
  if (cfg.history_length > 0) {
    particle.history.push_back(draw);
    while (particle.history.size() > cfg.history_length) particle.history.pop_front();
  }
  remove_dead_tracks(particle, cfg);
}

std::size_t best_particle(std::span<const Particle> particles) {
  if (particles.empty()) throw std::invalid_argument("best_particle: empty particle set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < particles.size(); ++i)
    if (particles[i].weight > particles[best].weight) best = i;
  return best;
}

Rbpf::Rbpf(TrackerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  particles_.resize(cfg_.num_particles);
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    particles_[i].weight = 1.0 / static_cast<double>(particles_.size());
    particles_[i].stream = rng::key(cfg_.seed, i, kInitSalt);
  }
}

const Particle& Rbpf::best() const { return particles_[best_particle(particles_)]; }

void Rbpf::advance(Particle& p, const Measurement& z, std::uint64_t step) const {
  if (z.t > p.last_time) {
    for (auto& track : p.tracks) {
      predict_track(track, z.t, cfg_);
      ++track.miss_count;
    }
    p.last_time = z.t;
  }
  const Proposal proposal = proposal_weights(p, z, cfg_);
  const std::size_t k = sample_target(proposal, rng::unit(rng::key(cfg_.seed, p.stream, step)));

  AssignmentDraw draw;
  draw.proposal_prob = proposal.probs[k];
  if (k == proposal.birth_index() || (p.tracks.empty() && k == 0)) {
    draw.target = AssignmentTarget::birth();
  } else if (k == proposal.clutter_index()) {
    draw.target = AssignmentTarget::clutter();
  } else {
    draw.target = AssignmentTarget::track(p.tracks[k].id);
  }
  birth_death_maintenance(p, z, draw, proposal, cfg_);
  // Weight kept in log form until renormalization.
  p.weight = std::log(p.weight) - proposal.log_alpha;
}

StepInfo Rbpf::step(const Measurement& z) {
  if (z.t < last_time_)
    throw StaleMeasurement("measurement at t=" + std::to_string(z.t) +
                           " is older than the last processed time " + std::to_string(last_time_));
  ++step_;
  for (auto& p : particles_) advance(p, z, step_);

  const std::vector<std::size_t> order = key_order(particles_);
  double max_lw = kNegInf;
  for (const auto& p : particles_) max_lw = std::max(max_lw, p.weight);
  if (!std::isfinite(max_lw)) throw NumericError("all particle weights vanished");
  double sum = 0.0;
  for (std::size_t i : order) sum += std::exp(particles_[i].weight - max_lw);
  for (auto& p : particles_) p.weight = std::exp(p.weight - max_lw) / sum;

  StepInfo info;
  std::vector<double> w(particles_.size());
  for (std::size_t i = 0; i < order.size(); ++i) w[i] = particles_[order[i]].weight;
  info.effective_sample_size = effective_sample_size(w);
  info.resampled = resample(particles_, cfg_, step_);
  last_time_ = z.t;
  return info;
}

std::vector<TrackSnapshot> Rbpf::snapshot(double t) const {
  std::vector<TrackSnapshot> out;
  for (ObjectTrack track : best().tracks) {
    if (track.hits < cfg_.confirm_hits) continue;
    if (t > track.last_update) predict_track(track, t, cfg_);
    out.push_back(snapshot_of(track, cfg_));
  }
  return out;
}

}  // namespace mmtrack
