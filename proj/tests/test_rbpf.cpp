#include "mmtrack/rbpf.hpp"

#include "mmtrack/pipeline.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>

using namespace mmtrack;

namespace {

TrackerConfig base_config(std::size_t particles = 4) {
  TrackerConfig cfg;
  cfg.classes = models_for({ObjectClass::Pedestrian, ObjectClass::Car});
  cfg.num_particles = particles;
  return cfg;
}

Measurement fix(double t, double x, double y) {
  Measurement z;
  z.t = t;
  z.kind = MeasurementKind::Position;
  z.z = Eigen::Vector2d(x, y);
  z.noise_cov = Eigen::Matrix2d::Identity() * 0.25;
  return z;
}

double weight_sum(const std::vector<Particle>& ps) {
  return std::accumulate(ps.begin(), ps.end(), 0.0, [](double s, const Particle& p) { return s + p.weight; });
}

}  // namespace

TEST_CASE("log-sum-exp") {
  const std::vector<double> v{std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK(log_sum_exp(v) == doctest::Approx(std::log(6.0)));
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> none{-std::numeric_limits<double>::infinity()};
  CHECK(log_sum_exp(none) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("first measurement of an empty scene starts a track in every particle") {
  Rbpf f(base_config(6));
  f.step(fix(0.0, 3.0, 4.0));
  for (const auto& p : f.particles()) {
    REQUIRE(p.tracks.size() == 1);
    CHECK(p.tracks[0].bank[0].mean.head<2>().isApprox(Eigen::Vector2d(3.0, 4.0)));
    CHECK(p.history.back().target.kind == AssignmentTarget::Kind::Birth);
  }
}

TEST_CASE("proposal for two identical tracks is symmetric and normalized") {
  const auto cfg = base_config();
  Particle p;
  p.tracks.push_back(make_track(1, fix(0.0, 5.0, 0.0), cfg));
  p.tracks.push_back(make_track(2, fix(0.0, 5.0, 0.0), cfg));
  const Proposal pr = proposal_weights(p, fix(0.0, 5.5, 0.0), cfg);
  REQUIRE(pr.probs.size() == 4);
  CHECK(pr.probs[0] == doctest::Approx(pr.probs[1]).epsilon(1e-15));
  CHECK(std::accumulate(pr.probs.begin(), pr.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pr.probs[pr.birth_index()] / pr.probs[pr.clutter_index()] == doctest::Approx(cfg.p_birth / cfg.p_clutter));
}

TEST_CASE("proposal normalizer against a direct evaluation") {
  const auto cfg = base_config();
  Particle p;
  p.tracks.push_back(make_track(1, fix(0.0, 5.0, 0.0), cfg));
  p.tracks.push_back(make_track(2, fix(0.0, 8.0, 2.0), cfg));
  p.tracks[1].class_post = ClassPosterior::from_weights(std::vector<double>{0.3, 0.7});
  const Measurement z = fix(0.0, 6.0, 0.5);
  const Proposal pr = proposal_weights(p, z, cfg);

  const double kappa = 1.0 / (0.5 * std::numbers::pi * 400.0);
  double total = (cfg.p_birth + cfg.p_clutter) * kappa;
  std::vector<double> mass;
  for (const auto& t : p.tracks) {
    double m = 0.0;
    for (std::size_t j = 0; j < 2; ++j)
      m += t.class_post[j] * meas_likelihood(t.bank[j], z.z, z.model(), cfg.classes[j].dynamics);
    mass.push_back((1.0 - cfg.p_birth - cfg.p_clutter) / 2.0 * m);
    total += mass.back();
  }
  CHECK(pr.log_alpha == doctest::Approx(-std::log(total)).epsilon(1e-12));
  CHECK(pr.probs[0] == doctest::Approx(mass[0] / total).epsilon(1e-12));
  CHECK(pr.probs[1] == doctest::Approx(mass[1] / total).epsilon(1e-12));
  CHECK(pr.probs[2] == doctest::Approx(cfg.p_birth * kappa / total).epsilon(1e-12));
}

TEST_CASE("a labelled return spreads the birth mass over the classes") {
  const auto cfg = base_config();
  Particle p;
  Measurement z = fix(0.0, 5.0, 0.0);
  const Proposal plain = proposal_weights(p, z, cfg);
  z.label = ObjectClass::Car;
  z.label_precision = 0.9;
  const Proposal labelled = proposal_weights(p, z, cfg);
  CHECK(labelled.log_alpha - plain.log_alpha == doctest::Approx(std::log(2.0)));
}

TEST_CASE("returns no track can explain go to birth and clutter by their priors") {
  const auto cfg = base_config();
  Particle p;
  p.tracks.push_back(make_track(1, fix(0.0, 0.0, 0.0), cfg));
  const Proposal pr = proposal_weights(p, fix(0.0, 1.0e4, 0.0), cfg);
  CHECK(pr.probs[0] == 0.0);
  CHECK(pr.probs[1] == doctest::Approx(cfg.p_birth / (cfg.p_birth + cfg.p_clutter)));
  CHECK(pr.probs[2] == doctest::Approx(cfg.p_clutter / (cfg.p_birth + cfg.p_clutter)));
}

TEST_CASE("gating removes birth, clutter and ungated tracks") {
  auto cfg = base_config();
  cfg.gating = true;
  Particle p;
  p.tracks.push_back(make_track(1, fix(0.0, 5.0, 0.0), cfg));
  p.tracks.push_back(make_track(2, fix(0.0, 15.0, 0.0), cfg));
  const Proposal pr = proposal_weights(p, fix(0.0, 5.2, 0.1), cfg);
  CHECK(pr.probs[0] == doctest::Approx(1.0));
  CHECK(pr.probs[1] == 0.0);
  CHECK(pr.probs[pr.birth_index()] == 0.0);
  CHECK(pr.probs[pr.clutter_index()] == 0.0);

  const Proposal far = proposal_weights(p, fix(0.0, -10.0, 8.0), cfg);
  CHECK(far.probs[far.birth_index()] > 0.0);
}

TEST_CASE("sampling walks the cumulative distribution and skips empty entries") {
  Proposal pr;
  pr.probs = {0.2, 0.0, 0.5, 0.3};
  CHECK(sample_target(pr, 0.0) == 0);
  CHECK(sample_target(pr, 0.19) == 0);
  CHECK(sample_target(pr, 0.2) == 2);
  CHECK(sample_target(pr, 0.69) == 2);
  CHECK(sample_target(pr, 0.71) == 3);
  CHECK(sample_target(pr, 0.9999999) == 3);
}

TEST_CASE("weight update and effective sample size") {
  CHECK(update_weight(0.5, 0.25) == 2.0);
  CHECK_THROWS_AS(update_weight(0.5, 0.0), std::invalid_argument);
  const std::vector<double> flat(8, 0.125);
  CHECK(effective_sample_size(flat) == doctest::Approx(8.0));
  const std::vector<double> one{0.0, 1.0, 0.0};
  CHECK(effective_sample_size(one) == doctest::Approx(1.0));
}

TEST_CASE("systematic offspring counts stay within one of N w") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 40);
    std::vector<double> w(n);
    for (auto& v : w) v = std::pow(u(gen), 3.0);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (s == 0.0) continue;
    for (auto& v : w) v /= s;
    const auto counts = systematic_offspring(w, u(gen));
    REQUIRE(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == n);
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = static_cast<double>(n) * w[i];
      CHECK(static_cast<double>(counts[i]) >= std::floor(expected) - 1e-9);
      CHECK(static_cast<double>(counts[i]) <= std::ceil(expected) + 1e-9);
    }
  }
}

TEST_CASE("resampling is triggered by a low effective sample size and ignores particle order") {
  auto cfg = base_config(5);
  std::vector<Particle> ps(5);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i].stream = 100 + i;
    ps[i].next_track_id = i;
    ps[i].weight = 0.2;
  }
  auto even = ps;
  CHECK_FALSE(resample(even, cfg, 1));

  ps[2].weight = 0.96;
  for (std::size_t i : {0u, 1u, 3u, 4u}) ps[i].weight = 0.01;
  auto shuffled = ps;
  std::reverse(shuffled.begin(), shuffled.end());
  REQUIRE(resample(ps, cfg, 7));
  REQUIRE(resample(shuffled, cfg, 7));
  auto key = [](const std::vector<Particle>& v) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> k;
    for (const auto& p : v) k.emplace_back(p.stream, p.next_track_id);
    std::sort(k.begin(), k.end());
    return k;
  };
  CHECK(key(ps) == key(shuffled));
  CHECK(ps.size() == 5);
  for (const auto& p : ps) {
    CHECK(p.weight == doctest::Approx(0.2));
    CHECK(p.next_track_id == 2);
  }
}

TEST_CASE("tracks die after too many misses or when their position spreads out") {
  auto cfg = base_config(1);
  cfg.max_misses = 3;
  Particle p;
  p.tracks.push_back(make_track(1, fix(0.0, 5.0, 0.0), cfg));
  p.tracks.push_back(make_track(2, fix(0.0, 9.0, 0.0), cfg));
  p.tracks[0].miss_count = 3;
  p.tracks[1].miss_count = 4;
  remove_dead_tracks(p, cfg);
  REQUIRE(p.tracks.size() == 1);
  CHECK(p.tracks[0].id == 1);
  p.tracks[0].bank[0].cov *= 1e4;
  p.tracks[0].bank[1].cov *= 1e4;
  remove_dead_tracks(p, cfg);
  CHECK(p.tracks.empty());
}

TEST_CASE("an unobserved track is dropped after the miss limit") {
  auto cfg = base_config(1);
  cfg.max_misses = 5;
  cfg.p_clutter = 0.9;
  cfg.p_birth = 0.05;
  Rbpf f(cfg);
  f.step(fix(0.0, 5.0, 0.0));
  // far returns that only birth or clutter can explain
  std::size_t survived = 0;
  for (int k = 1; k <= 6; ++k) {
    f.step(fix(0.1 * k, -500.0, 500.0));
    const auto& tracks = f.particles().front().tracks;
    survived = static_cast<std::size_t>(std::count_if(tracks.begin(), tracks.end(), [](const ObjectTrack& t) { return t.id == 1; }));
    if (k <= 5) CHECK(survived == 1);
  }
  CHECK(survived == 0);
}

TEST_CASE("several returns with one timestamp count a single miss") {
  auto cfg = base_config(1);
  cfg.p_clutter = 0.9;
  Rbpf f(cfg);
  f.step(fix(0.0, 5.0, 0.0));
  for (int i = 0; i < 4; ++i) f.step(fix(0.1, -500.0, 500.0 + i));
  const auto& tracks = f.particles().front().tracks;
  const auto it = std::find_if(tracks.begin(), tracks.end(), [](const ObjectTrack& t) { return t.id == 1; });
  REQUIRE(it != tracks.end());
  CHECK(it->miss_count == 1);
}

TEST_CASE("stale measurements are rejected") {
  Rbpf f(base_config());
  f.step(fix(1.0, 5.0, 0.0));
  CHECK_NOTHROW(f.step(fix(1.0, 5.1, 0.0)));
  CHECK_THROWS_AS(f.step(fix(0.5, 5.0, 0.0)), StaleMeasurement);
}

TEST_CASE("best particle ties go to the lowest index") {
  std::vector<Particle> ps(3);
  ps[0].weight = 0.2;
  ps[1].weight = 0.4;
  ps[2].weight = 0.4;
  CHECK(best_particle(ps) == 1);
  CHECK_THROWS_AS(best_particle(std::vector<Particle>{}), std::invalid_argument);
}

TEST_CASE("one particle on one object reduces to the standalone filter bank") {
  const auto r = oracle::rbpf_reduction(500, 2024);
  CHECK(r.steps == 500);
  CHECK(r.track_count_violations == 0);
  CHECK(r.max_state_diff <= 1e-12);
  CHECK(r.max_cov_diff <= 1e-12);
  CHECK(r.max_prob_diff <= 1e-12);
}

TEST_CASE("weights stay normalized and covariances PSD on a cluttered scene") {
  Scenario sc = builtin_scenario('C', "snow_rain", 5);
  sc.duration = 8.0;
  const SimOutput sim = run_scenario(sc);
  Rbpf f(scenario_tracker_config(12, HeadingMode::Split, 5));
  std::size_t resamples = 0;
  for (const auto& z : sim.measurements) {
    const StepInfo info = f.step(z);
    resamples += info.resampled;
    REQUIRE(weight_sum(f.particles()) == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(info.effective_sample_size <= 12.0 + 1e-9);
    for (const auto& p : f.particles())
      for (const auto& t : p.tracks)
        for (const auto& b : t.bank) REQUIRE(is_positive_semidefinite(b.cov));
  }
  CHECK(resamples > 0);
}

TEST_CASE("seeded runs are bit-identical") {
  const Scenario sc = builtin_scenario('A', "sunny", 3);
  const SimOutput sim = run_scenario(sc);
  auto run = [&] {
    Rbpf f(scenario_tracker_config(8, HeadingMode::Split, 11));
    for (const auto& z : sim.measurements) f.step(z);
    return f;
  };
  const Rbpf a = run(), b = run();
  REQUIRE(a.particles().size() == b.particles().size());
  for (std::size_t i = 0; i < a.particles().size(); ++i) {
    const auto& pa = a.particles()[i];
    const auto& pb = b.particles()[i];
    CHECK(pa.weight == pb.weight);
    CHECK(pa.stream == pb.stream);
    REQUIRE(pa.tracks.size() == pb.tracks.size());
    for (std::size_t k = 0; k < pa.tracks.size(); ++k)
      for (std::size_t j = 0; j < pa.tracks[k].bank.size(); ++j) {
        CHECK(pa.tracks[k].bank[j].mean == pb.tracks[k].bank[j].mean);
        CHECK(pa.tracks[k].bank[j].cov == pb.tracks[k].bank[j].cov);
      }
  }
}

TEST_CASE("different seeds explore different associations") {
  const Scenario sc = cluttered_scenario(2);
  SimOutput sim = run_scenario(sc);
  sim.measurements.resize(std::min<std::size_t>(sim.measurements.size(), 400));
  auto draws = [&](std::uint64_t seed) {
    Rbpf f(scenario_tracker_config(1, HeadingMode::Split, seed));
    std::vector<int> kinds;
    for (const auto& z : sim.measurements) {
      f.step(z);
      kinds.push_back(static_cast<int>(f.particles().front().history.back().target.kind));
    }
    return kinds;
  };
  CHECK(draws(1) != draws(2));
}

TEST_CASE("snapshots only export confirmed tracks") {
  auto cfg = base_config(1);
  cfg.confirm_hits = 3;
  Rbpf f(cfg);
  f.step(fix(0.0, 5.0, 0.0));
  f.step(fix(0.1, 5.0, 0.05));
  CHECK(f.snapshot(0.1).empty());
  f.step(fix(0.2, 5.0, 0.1));
  const auto snap = f.snapshot(0.3);
  REQUIRE(snap.size() == 1);
  CHECK(snap[0].hits == 3);
}
