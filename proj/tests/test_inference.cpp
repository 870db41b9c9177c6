#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "fixtures.hpp"
#include "gangtrack/errors.hpp"
#include "gangtrack/inference.hpp"
#include "gangtrack/simgen.hpp"
#include "oracles.hpp"

using namespace gangtrack;

namespace {

const KmScale kScale = KmScale::at_latitude(23.6);

double weight_sum(const ParticleSet& ps) { return std::accumulate(ps.weights.begin(), ps.weights.end(), 0.0); }

Track straight_track(int days, int first = 1) {
  Track t{"g", {}};
  for (int d = 0; d < days; ++d) t.observations[first + d] = {85.3 + 0.004 * d, 23.6 + 0.003 * (d % 3)};
  return t;
}

ParticleSet hand_set(std::vector<ModelParams> ps, std::vector<double> w) {
  ParticleSet s;
  s.particles = std::move(ps);
  s.weights = std::move(w);
  s.nominal_size = static_cast<int>(s.particles.size());
  return s;
}

struct MassRecorder : SequentialObserver {
  std::vector<std::pair<Stage, double>> masses;
  int before = 0;
  void before_update(const Track&, int, const ParticleSet&, const DailyPrior*) override { ++before; }
  void after_stage(Stage s, const ParticleSet& ps) override { masses.emplace_back(s, ps.total_mass()); }
};

}  // namespace

TEST_CASE("initial particles: deterministic, inside the box, flat") {
  const ParamBox box{};
  const auto a = init_particles(2000, box, 42);
  const auto b = init_particles(2000, box, 42);
  REQUIRE(a.size() == 2000);
  double mean_theta = 0.0, mean_h = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.particles[i].theta == b.particles[i].theta);
    CHECK(a.particles[i].h == b.particles[i].h);
    CHECK(box.contains(a.particles[i]));
    mean_theta += a.particles[i].theta / 2000.0;
    mean_h += a.particles[i].h / 2000.0;
  }
  CHECK(std::fabs(weight_sum(a) - 1.0) < 1e-12);
  CHECK(a.expert_mass == 0.0);
  const double sd_theta = (box.theta_max - box.theta_min) / std::sqrt(12.0);
  const double sd_h = (box.h_max - box.h_min) / std::sqrt(12.0);
  CHECK(std::fabs(mean_theta - (box.theta_min + box.theta_max) / 2) < 3 * sd_theta / std::sqrt(2000.0));
  CHECK(std::fabs(mean_h - (box.h_min + box.h_max) / 2) < 3 * sd_h / std::sqrt(2000.0));
  const auto c = init_particles(2000, box, 43);
  CHECK(c.particles[0].theta != a.particles[0].theta);
  CHECK_THROWS_AS(init_particles(100, ParamBox{5, 5, 1, 2}, 1), InvalidParameter);
}

TEST_CASE("expert mass injection") {
  const auto ps = init_particles(200, ParamBox{}, 1);
  const auto none = inject_expert_mass(ps, 0.0);
  CHECK(none.expert_mass == 0.0);
  CHECK(none.weights == ps.weights);
  const auto half = inject_expert_mass(ps, 0.5);
  CHECK(half.expert_mass == 0.5);
  CHECK(weight_sum(half) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::fabs(half.total_mass() - 1.0) < 1e-12);
  CHECK_THROWS_AS(inject_expert_mass(ps, 1.0), InvalidParameter);
  CHECK_THROWS_AS(inject_expert_mass(ps, -0.1), InvalidParameter);
}

TEST_CASE("update without an observation changes nothing") {
  const Track t = straight_track(5);
  const auto ps = inject_expert_mass(init_particles(100, ParamBox{}, 3), 0.1);
  const fixture::CaseTable f;
  const auto prior = build_expert_prior(f.grid, f.forest, f.camps, f.recent, {}, 6);
  const auto [out, s] = bayes_update(ps, t, 6, &prior, std::nullopt, kScale);
  CHECK(out.weights == ps.weights);
  CHECK(out.expert_mass == ps.expert_mass);
  CHECK(s.q0_prior == ps.expert_mass);
}

TEST_CASE("update weights follow the model density") {
  // Contiguous history, so the model density is the plain weighted kernel sum.
  const Track t = straight_track(6);
  const GeoPoint obs{85.318, 23.604};
  const std::vector<ModelParams> params{{2.0, 1.0}, {4.0, 1.5}, {20.0, 0.8}, {4.0, 3.0}};
  const auto ps = hand_set(params, {0.1, 0.2, 0.3, 0.4});
  std::vector<GeoPoint> hist;
  for (const auto& [d, p] : t.observations) hist.push_back(p);
  const auto [out, s] = bayes_update(ps, t, 7, nullptr, obs, kScale);
  std::vector<double> expect(params.size());
  double total = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    expect[i] = ps.weights[i] * oracle::conditional(hist, params[i].theta, params[i].h, kScale, obs);
    total += expect[i];
  }
  for (std::size_t i = 0; i < params.size(); ++i) CHECK(out.weights[i] == doctest::Approx(expect[i] / total).epsilon(1e-12));
  CHECK(out.expert_mass == 0.0);
  CHECK(out.day == 7);
}

TEST_CASE("update competes the expert map against the particles per km2") {
  const fixture::CaseTable f;
  Track t{"g", {}};
  for (int d = 1; d <= 4; ++d) t.observations[d] = f.grid.center(12, 10 + (d % 2));
  const auto prior = build_expert_prior(f.grid, f.forest, f.camps, f.recent, f.intel, 5);
  const GeoPoint obs = f.grid.center(12, 9);
  std::vector<GeoPoint> hist;
  for (const auto& [d, p] : t.observations) hist.push_back(p);
  const ModelParams p{4.0, 1.0};
  const auto ps = inject_expert_mass(hand_set({p}, {1.0}), 0.5);
  const auto [out, s] = bayes_update(ps, t, 5, &prior, obs, f.scale);
  const double model_km2 = oracle::conditional(hist, p.theta, p.h, f.scale, obs) * f.scale.delta_lon * f.scale.delta_lat;
  const double e = prior.at(obs);
  CHECK(out.expert_mass == doctest::Approx(e / (e + model_km2)).epsilon(1e-12));
  CHECK(std::fabs(out.total_mass() - 1.0) < 1e-12);
}

TEST_CASE("observation where the expert map is zero removes the expert mass") {
  const fixture::CaseTable f;
  const auto prior = build_expert_prior(f.grid, f.forest, f.camps, f.recent, {}, 5);
  Track t{"g", {}};
  for (int d = 1; d <= 4; ++d) t.observations[d] = f.grid.center(0, 23);
  const GeoPoint obs = f.grid.center(0, 22);
  REQUIRE(prior.at(obs) == 0.0);
  const auto ps = inject_expert_mass(init_particles(50, ParamBox{}, 1), 0.5);
  const auto [out, s] = bayes_update(ps, t, 5, &prior, obs, f.scale);
  CHECK(out.expert_mass == 0.0);
  CHECK(std::fabs(weight_sum(out) - 1.0) < 1e-12);
  CHECK_THROWS_AS(bayes_update(ps, t, 5, &prior, GeoPoint{90.0, 30.0}, f.scale), OutOfRegion);
}

TEST_CASE("single particle keeps all the mass") {
  const Track t = straight_track(4);
  const auto ps = hand_set({{3.0, 2.0}}, {1.0});
  const auto [out, s] = bayes_update(ps, t, 5, nullptr, GeoPoint{85.5, 23.7}, kScale);
  CHECK(out.weights[0] == 1.0);
  CHECK(s.theta.mean == 3.0);
}

TEST_CASE("stripping the expert mass") {
  const auto ps = hand_set({{2, 1}, {3, 1}}, {0.25, 0.25});
  auto with = ps;
  with.expert_mass = 0.5;
  const auto out = strip_expert(with);
  CHECK(out.expert_mass == 0.0);
  CHECK(out.weights[0] == 0.5);
  CHECK(out.weights[1] == 0.5);
  const auto plain = strip_expert(hand_set({{2, 1}, {3, 1}}, {0.5, 0.5}));
  CHECK(plain.weights == std::vector<double>{0.5, 0.5});
  auto all = hand_set({{2, 1}}, {0.0});
  all.expert_mass = 1.0;
  CHECK_THROWS_AS(strip_expert(all), DegeneratePosterior);
}

TEST_CASE("beta moments") {
  const auto [a, b] = beta_shapes(0.5, std::sqrt(0.05));
  CHECK(a == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b == doctest::Approx(2.0).epsilon(1e-12));
  const auto [a2, b2] = beta_shapes(0.2, 0.1);
  CHECK(a2 / (a2 + b2) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(a2 * b2 / ((a2 + b2) * (a2 + b2) * (a2 + b2 + 1)) == doctest::Approx(0.01).epsilon(1e-12));
  // Too large an sd is clamped so the shapes stay positive.
  const auto [a3, b3] = beta_shapes(0.5, 0.6);
  CHECK(a3 > 0.0);
  CHECK(b3 > 0.0);
  CHECK_THROWS_AS(beta_shapes(0.0, 0.1), InvalidParameter);
  CHECK_THROWS_AS(beta_shapes(0.5, 0.0), InvalidParameter);
}

TEST_CASE("rejuvenation: degenerate sets pass through") {
  const auto one = hand_set({{4.0, 1.0}}, {1.0});
  const auto out = rejuvenate(one, ParamBox{}, 0.7, 5);
  CHECK(out.particles.size() == 1);
  CHECK(out.particles[0].theta == 4.0);
  CHECK_THROWS_AS(rejuvenate(one, ParamBox{}, 1.0, 5), InvalidParameter);
}

TEST_CASE("rejuvenation keeps the weighted mean and spread") {
  const ParamBox box{};
  auto ps = hand_set({{3.0, 1.0}, {5.0, 1.4}, {8.0, 0.9}, {4.0, 2.0}, {6.0, 1.2}}, {0.3, 0.25, 0.1, 0.15, 0.2});
  ps.nominal_size = 20000;
  const auto out = rejuvenate(ps, box, 0.7, 99);
  REQUIRE(out.size() == 20000);
  double mt = 0.0, mh = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    mt += ps.weights[i] * ps.particles[i].theta;
    mh += ps.weights[i] * ps.particles[i].h;
  }
  double vt = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) vt += ps.weights[i] * (ps.particles[i].theta - mt) * (ps.particles[i].theta - mt);
  double rt = 0.0, rh = 0.0, rvt = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(box.contains(out.particles[i]));
    rt += out.weights[i] * out.particles[i].theta;
    rh += out.weights[i] * out.particles[i].h;
  }
  for (std::size_t i = 0; i < out.size(); ++i) rvt += out.weights[i] * (out.particles[i].theta - rt) * (out.particles[i].theta - rt);
  const double sd_t = std::sqrt(vt);
  CHECK(std::fabs(rt - mt) < 4 * sd_t / std::sqrt(20000.0));
  CHECK(std::fabs(rh - mh) < 0.01);
  CHECK(std::sqrt(rvt) == doctest::Approx(sd_t).epsilon(0.05));
  CHECK(std::fabs(weight_sum(out) - 1.0) < 1e-12);
  // Deterministic under the seed.
  const auto again = rejuvenate(ps, box, 0.7, 99);
  CHECK(again.particles[123].theta == out.particles[123].theta);
}

TEST_CASE("weighted quantile") {
  const std::vector<double> v{1, 2, 3, 4};
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  CHECK(weighted_quantile(v, w, 0.05) == 1);
  CHECK(weighted_quantile(v, w, 0.3) == 2);
  CHECK(weighted_quantile(v, w, 0.31) == 3);
  CHECK(weighted_quantile(v, w, 1.0) == 4);
  CHECK_THROWS_AS(weighted_quantile(std::vector<double>{}, std::vector<double>{}, 0.5), InvalidParameter);
}

TEST_CASE("summary: interval brackets the mean") {
  const auto ps = init_particles(1000, ParamBox{}, 8);
  const auto s = summarize(ps, 0.95);
  CHECK(s.theta.lo <= s.theta.mean);
  CHECK(s.theta.mean <= s.theta.hi);
  CHECK(s.h.lo <= s.h.mean);
  CHECK(s.h.mean <= s.h.hi);
  CHECK(s.theta.lo >= ParamBox{}.theta_min);
  CHECK(s.theta.hi <= ParamBox{}.theta_max);
}

TEST_CASE("decile compression") {
  const auto ps = init_particles(1000, ParamBox{}, 17);
  const auto c = decile_compress(ps);
  CHECK(c.size() <= 100);
  CHECK(c.nominal_size == 1000);
  CHECK(std::fabs(weight_sum(c) - 1.0) < 1e-12);
  std::set<double> thetas, hs;
  for (const auto& p : c.particles) {
    thetas.insert(p.theta);
    hs.insert(p.h);
  }
  CHECK(thetas.size() <= 10);
  CHECK(hs.size() <= 10);
  // Values that already sit on their own deciles stay put.
  const auto again = decile_compress(c);
  CHECK(again.size() == c.size());
  const auto two = decile_compress(hand_set({{2, 1}, {6, 3}}, {0.5, 0.5}));
  CHECK(two.size() == 2);
  CHECK(std::fabs(weight_sum(two) - 1.0) < 1e-15);
  CHECK_THROWS_AS(decile_compress(ParticleSet{}), InvalidParameter);
}

TEST_CASE("spread restoration matches the reference moments") {
  const auto ref = init_particles(5000, ParamBox{}, 3);
  const auto c = decile_compress(ref);
  const auto r = restore_spread(c, ref, ParamBox{});
  auto moments = [](const ParticleSet& ps) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) m += ps.weights[i] * ps.particles[i].h;
    for (std::size_t i = 0; i < ps.size(); ++i) v += ps.weights[i] * (ps.particles[i].h - m) * (ps.particles[i].h - m);
    return std::pair{m, std::sqrt(v)};
  };
  const auto [m_ref, sd_ref] = moments(ref);
  const auto [m_c, sd_c] = moments(c);
  const auto [m_r, sd_r] = moments(r);
  CHECK(sd_c < sd_ref);
  CHECK(m_r == doctest::Approx(m_ref).epsilon(1e-3));
  CHECK(sd_r == doctest::Approx(sd_ref).epsilon(1e-2));
  CHECK(std::fabs(weight_sum(r) - 1.0) < 1e-12);
  for (const auto& p : r.particles) CHECK(ParamBox{}.contains(p));
}

TEST_CASE("sequential run: one summary per usable sighting, mass conserved at every stage") {
  SimConfig sim;
  sim.n = 40;
  sim.seed = 5;
  const Track full = simulate_track(sim);
  const Track masked = mask_track(full, 0.3, 9);
  Track other = simulate_track([&] {
    SimConfig o = sim;
    o.seed = 6;
    o.gang_id = "B";
    o.first_day = 10;
    return o;
  }());
  const std::vector<Track> tracks{masked, other};
  PfConfig cfg;
  cfg.particles = 300;
  MassRecorder rec;
  const auto res = run_sequential(tracks, {}, cfg, sim.scale, 11, &rec, nullptr, 3);

  std::size_t expected = 0;
  for (const auto& t : tracks) {
    for (const auto& [d, p] : t.observations) expected += t.count_before(d) >= 3 ? 1 : 0;
  }
  CHECK(res.summaries.size() == expected);
  CHECK(rec.before == static_cast<int>(expected));
  CHECK(res.state.updates == static_cast<std::int64_t>(expected));
  for (const auto& [stage, m] : rec.masses) {
    INFO(to_string(stage));
    CHECK(std::fabs(m - 1.0) < 1e-9);
  }
  for (std::size_t i = 1; i < res.summaries.size(); ++i) CHECK(res.summaries[i].day >= res.summaries[i - 1].day);

  const auto again = run_sequential(tracks, {}, cfg, sim.scale, 11, nullptr, nullptr, 3);
  REQUIRE(again.summaries.size() == res.summaries.size());
  CHECK(again.summaries.back().theta.mean == res.summaries.back().theta.mean);
  CHECK(again.summaries.back().h.hi == res.summaries.back().h.hi);
}

TEST_CASE("sequential run: resuming from a saved state matches an uninterrupted run") {
  SimConfig sim;
  sim.n = 30;
  sim.seed = 21;
  const Track t = simulate_track(sim);
  PfConfig cfg;
  cfg.particles = 200;
  const std::vector<Track> whole{t};
  const auto ref = run_sequential(whole, {}, cfg, sim.scale, 4);

  Track head = t;
  for (auto it = head.observations.begin(); it != head.observations.end();) {
    it = it->first > 15 ? head.observations.erase(it) : std::next(it);
  }
  const std::vector<Track> part{head};
  const auto first = run_sequential(part, {}, cfg, sim.scale, 4);
  const auto rest = run_sequential(whole, {}, cfg, sim.scale, 4, nullptr, &first.state);
  REQUIRE(first.summaries.size() + rest.summaries.size() == ref.summaries.size());
  const auto& a = ref.summaries.back();
  const auto& b = rest.summaries.back();
  CHECK(a.day == b.day);
  CHECK(a.theta.mean == b.theta.mean);
  CHECK(a.theta.lo == b.theta.lo);
  CHECK(a.h.hi == b.h.hi);
}

TEST_CASE("sequential run with expert maps keeps q0 in range") {
  const fixture::CaseTable f;
  Track t{"g", {}};
  for (int d = 1; d <= 12; ++d) t.observations[d] = f.grid.center(12 + (d % 3) - 1, 9 + (d % 4));
  const PriorProvider provider = [&](const Track& tr, int day) -> std::optional<DailyPrior> {
    const auto recent = tr.recent_before(day, 3);
    DailyPrior dp{build_expert_prior(f.grid, f.forest, f.camps, recent, f.intel, day), 0.0};
    dp.p_n = prior_credibility(dp.prior.intel_fresh);
    return dp;
  };
  PfConfig cfg;
  cfg.particles = 200;
  MassRecorder rec;
  const std::vector<Track> tracks{t};
  const auto res = run_sequential(tracks, provider, cfg, f.scale, 2, &rec);
  REQUIRE_FALSE(res.summaries.empty());
  for (const auto& s : res.summaries) {
    CHECK(s.q0_prior > 0.0);
    CHECK(s.q0_posterior >= 0.0);
    CHECK(s.q0_posterior <= 1.0);
  }
  for (const auto& [stage, m] : rec.masses) CHECK(std::fabs(m - 1.0) < 1e-9);
}

TEST_CASE("derived seeds differ by ordinal and stream") {
  CHECK(derive_seed(1, 0, 1) == derive_seed(1, 0, 1));
  CHECK(derive_seed(1, 0, 1) != derive_seed(1, 1, 1));
  CHECK(derive_seed(1, 0, 1) != derive_seed(1, 0, 2));
  CHECK(derive_seed(1, 0, 1) != derive_seed(2, 0, 1));
}
