#include "gangtrack/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "gangtrack/errors.hpp"
#include "gangtrack/random.hpp"

namespace gangtrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> normalized(std::span<const double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> out(w.begin(), w.end());
  if (total > 0.0) {
    for (double& v : out) v /= total;
  }
  return out;
}

int distinct_count(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double ParticleSet::total_mass() const {
  return expert_mass + std::accumulate(weights.begin(), weights.end(), 0.0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::int64_t ordinal, std::uint64_t stream) {
  return splitmix(splitmix(splitmix(seed) ^ static_cast<std::uint64_t>(ordinal)) ^ (stream * 0x632be59bd9b4e019ULL));
}

ParticleSet init_particles(int n, const ParamBox& box, std::uint64_t seed) {
  box.validate();
  if (n < 1) throw InvalidParameter("particle count must be positive");
  Rng rng(seed);
  ParticleSet ps;
  ps.nominal_size = n;
  ps.particles.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double theta = rng.uniform(box.theta_min, box.theta_max);
    const double h = rng.uniform(box.h_min, box.h_max);
    ps.particles.push_back({theta, h});
  }
  ps.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  return ps;
}

ParticleSet inject_expert_mass(const ParticleSet& ps, double p_n) {
  if (!(p_n >= 0.0 && p_n < 1.0)) throw InvalidParameter("credibility weight must lie in [0, 1)");
  ParticleSet out = ps;
  if (p_n == 0.0 && ps.expert_mass == 0.0) return out;
  const double total = std::accumulate(ps.weights.begin(), ps.weights.end(), 0.0);
  if (!(total > 0.0)) throw DegeneratePosterior("no particle mass to share with the expert marker");
  for (double& w : out.weights) w *= (1.0 - p_n) / total;
  out.expert_mass = p_n;
  return out;
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double prob) {
  if (values.empty()) throw InvalidParameter("quantile of an empty sample");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double target = prob * total;
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += weights[i];
    if (cum >= target * (1.0 - 1e-12) && weights[i] > 0.0) return values[i];
  }
  return values[order.back()];
}

PosteriorSummary summarize(const ParticleSet& ps, double credible_mass) {
  PosteriorSummary s;
  s.day = ps.day;
  s.q0_posterior = ps.expert_mass;
  if (ps.particles.empty()) return s;
  const auto w = normalized(ps.weights);
  std::vector<double> theta(ps.size()), h(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    theta[i] = ps.particles[i].theta;
    h[i] = ps.particles[i].h;
  }
  const double lo = (1.0 - credible_mass) / 2.0;
  const double hi = 1.0 - lo;
  const auto interval = [&](const std::vector<double>& v) {
    Interval iv;
    for (std::size_t i = 0; i < v.size(); ++i) iv.mean += w[i] * v[i];
    iv.lo = std::min(weighted_quantile(v, w, lo), iv.mean);
    iv.hi = std::max(weighted_quantile(v, w, hi), iv.mean);
    return iv;
  };
  s.theta = interval(theta);
  s.h = interval(h);
  return s;
}

std::pair<ParticleSet, PosteriorSummary> bayes_update(const ParticleSet& ps, const Track& track, int day,
                                                      const ExpertPrior* expert_prior,
                                                      const std::optional<GeoPoint>& observed,
                                                      const KmScale& scale, LikelihoodVariant variant) {
  if (!observed) {
    auto s = summarize(ps);
    s.gang_id = track.gang_id;
    s.q0_prior = ps.expert_mass;
    return {ps, s};
  }
  double log_expert = kNegInf;
  if (expert_prior != nullptr) {
    const double e = expert_prior->at(*observed);
    log_expert = e > 0.0 ? std::log(e) : kNegInf;
  } else if (ps.expert_mass > 0.0) {
    throw InvalidParameter("expert mass without an expert map");
  }

  const ConditionalModel model(track, day);
  const double log_km2 = std::log(scale.deg2_per_km2());
  std::map<double, MixtureCoefficients> by_theta;
  std::vector<double> logw(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& p = ps.particles[i];
    if (!(ps.weights[i] > 0.0)) {
      logw[i] = kNegInf;
      continue;
    }
    auto it = by_theta.find(p.theta);
    if (it == by_theta.end()) it = by_theta.emplace(p.theta, model.coefficients(p.theta, variant)).first;
    logw[i] = std::log(ps.weights[i]) + model.log_density(it->second, p.h, *observed, scale) + log_km2;
  }
  const double log_q0 = ps.expert_mass > 0.0 ? std::log(ps.expert_mass) + log_expert : kNegInf;

  double top = log_q0;
  for (double v : logw) top = std::max(top, v);
  if (top == kNegInf) throw DegeneratePosterior("every hypothesis gives zero likelihood on day " + std::to_string(day));
  double total = log_q0 == kNegInf ? 0.0 : std::exp(log_q0 - top);
  for (double v : logw) total += v == kNegInf ? 0.0 : std::exp(v - top);

  ParticleSet out = ps;
  out.day = day;
  for (std::size_t i = 0; i < ps.size(); ++i) out.weights[i] = logw[i] == kNegInf ? 0.0 : std::exp(logw[i] - top) / total;
  out.expert_mass = log_q0 == kNegInf ? 0.0 : std::exp(log_q0 - top) / total;

  auto s = summarize(out);
  s.gang_id = track.gang_id;
  s.q0_prior = ps.expert_mass;
  return {out, s};
}

ParticleSet strip_expert(const ParticleSet& ps) {
  const double rest = std::accumulate(ps.weights.begin(), ps.weights.end(), 0.0);
  if (ps.expert_mass >= 1.0 || !(rest > 0.0)) throw DegeneratePosterior("posterior mass is entirely on the expert marker");
  ParticleSet out = ps;
  if (ps.expert_mass == 0.0 && rest == 1.0) return out;
  for (double& w : out.weights) w /= rest;
  out.expert_mass = 0.0;
  return out;
}

std::pair<double, double> beta_shapes(double mean, double sd) {
  if (!(mean > 0.0 && mean < 1.0) || !(sd > 0.0)) throw InvalidParameter("beta moments need 0 < mean < 1 and sd > 0");
  const double var_max = mean * (1.0 - mean);
  sd = std::min(sd, 0.99 * std::sqrt(var_max));
  const double nu = var_max / (sd * sd) - 1.0;
  return {mean * nu, (1.0 - mean) * nu};
}

ParticleSet rejuvenate(const ParticleSet& ps, const ParamBox& box, double smoothing, std::uint64_t seed) {
  box.validate();
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw InvalidParameter("smoothing factor must lie in [0, 1)");
  if (ps.particles.empty()) return ps;
  const auto w = normalized(ps.weights);
  const double h_span = box.h_max - box.h_min;
  const double t_span = box.theta_max - box.theta_min;
  std::vector<double> hs(ps.size()), ts(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    hs[i] = std::clamp((ps.particles[i].h - box.h_min) / h_span, 0.0, 1.0);
    ts[i] = std::clamp((ps.particles[i].theta - box.theta_min) / t_span, 0.0, 1.0);
  }
  std::vector<double> hs_pos, ts_pos;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (w[i] > 0.0) {
      hs_pos.push_back(hs[i]);
      ts_pos.push_back(ts[i]);
    }
  }
  if (distinct_count(hs_pos) < 2 || distinct_count(ts_pos) < 2) return ps;

  struct Moments {
    double mean = 0.0;
    double sd = 0.0;
  };
  const auto moments = [&](const std::vector<double>& v) {
    Moments m;
    for (std::size_t i = 0; i < v.size(); ++i) m.mean += w[i] * v[i];
    double var = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) var += w[i] * (v[i] - m.mean) * (v[i] - m.mean);
    m.sd = std::sqrt(var);
    return m;
  };
  const Moments mh = moments(hs);
  const Moments mt = moments(ts);
  const double kh = smoothing * mh.sd;
  const double kt = smoothing * mt.sd;
  // Kernel centres are pulled toward the weighted mean so that the mixture keeps the
  // weighted mean and sd of the particles instead of inflating the spread each day.
  const double shrink = std::sqrt(1.0 - smoothing * smoothing);

  constexpr double kEdge = 1e-9;
  struct Kernel {
    double h_mean, h_a, h_b, t_mean, t_a, t_b;
  };
  std::vector<Kernel> kernels(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& k = kernels[i];
    // A kernel centred closer to an edge than its own spread is moved inward, so mass
    // that reaches the boundary can still leave it.
    const double h_edge = std::clamp(kh, kEdge, 0.5);
    const double t_edge = std::clamp(kt, kEdge, 0.5);
    k.h_mean = std::clamp(mh.mean + shrink * (hs[i] - mh.mean), h_edge, 1.0 - h_edge);
    k.t_mean = std::clamp(mt.mean + shrink * (ts[i] - mt.mean), t_edge, 1.0 - t_edge);
    if (kh > 0.0) std::tie(k.h_a, k.h_b) = beta_shapes(k.h_mean, kh);
    if (kt > 0.0) std::tie(k.t_a, k.t_b) = beta_shapes(k.t_mean, kt);
  }
  std::vector<double> cdf(ps.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());

  Rng rng(seed);
  const int n = ps.nominal_size > 0 ? ps.nominal_size : static_cast<int>(ps.size());
  ParticleSet out;
  out.day = ps.day;
  out.nominal_size = n;
  out.particles.reserve(static_cast<std::size_t>(n));
  // Components are picked by systematic resampling, which keeps the Monte Carlo
  // drift of the cloud small compared with independent picks.
  const double offset = rng.uniform();
  for (int d = 0; d < n; ++d) {
    const double u = (d + offset) / n * cdf.back();
    auto j = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    j = std::min(j, ps.size() - 1);
    while (w[j] == 0.0 && j > 0) --j;
    const auto& k = kernels[j];
    const double hv = kh > 0.0 ? rng.beta(k.h_a, k.h_b) : hs[j];
    const double tv = kt > 0.0 ? rng.beta(k.t_a, k.t_b) : ts[j];
    out.particles.push_back({std::clamp(box.theta_min + tv * t_span, box.theta_min, box.theta_max),
                             std::clamp(box.h_min + hv * h_span, box.h_min, box.h_max)});
  }
  out.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  return out;
}

ParticleSet restore_spread(const ParticleSet& compressed, const ParticleSet& reference, const ParamBox& box) {
  if (compressed.particles.empty() || reference.particles.empty()) return compressed;
  const auto wc = normalized(compressed.weights);
  const auto wr = normalized(reference.weights);
  const auto stats = [](const std::vector<double>& w, const std::vector<ModelParams>& p, double ModelParams::*field) {
    double mean = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mean += w[i] * (p[i].*field);
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) var += w[i] * ((p[i].*field) - mean) * ((p[i].*field) - mean);
    return std::pair{mean, std::sqrt(var)};
  };
  const auto [tc, tc_sd] = stats(wc, compressed.particles, &ModelParams::theta);
  const auto [hc, hc_sd] = stats(wc, compressed.particles, &ModelParams::h);
  const auto [tr, tr_sd] = stats(wr, reference.particles, &ModelParams::theta);
  const auto [hr, hr_sd] = stats(wr, reference.particles, &ModelParams::h);
  const double t_gain = tc_sd > 0.0 ? tr_sd / tc_sd : 1.0;
  const double h_gain = hc_sd > 0.0 ? hr_sd / hc_sd : 1.0;
  std::map<ModelParams, double> merged;
  for (std::size_t i = 0; i < compressed.size(); ++i) {
    const auto& p = compressed.particles[i];
    const double theta = tc_sd > 0.0 ? tr + (p.theta - tc) * t_gain : p.theta;
    const double h = hc_sd > 0.0 ? hr + (p.h - hc) * h_gain : p.h;
    merged[{std::clamp(theta, box.theta_min, box.theta_max), std::clamp(h, box.h_min, box.h_max)}] +=
        compressed.weights[i];
  }
  ParticleSet out = compressed;
  out.particles.clear();
  out.weights.clear();
  for (const auto& [p, w] : merged) {
    out.particles.push_back(p);
    out.weights.push_back(w);
  }
  return out;
}

ParticleSet decile_compress(const ParticleSet& ps) {
  if (ps.particles.empty()) throw InvalidParameter("cannot compress an empty particle set");
  std::vector<double> theta(ps.size()), h(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    theta[i] = ps.particles[i].theta;
    h[i] = ps.particles[i].h;
  }
  const auto deciles = [&](const std::vector<double>& v) {
    std::vector<double> q(10);
    for (int k = 0; k < 10; ++k) q[static_cast<std::size_t>(k)] = weighted_quantile(v, ps.weights, (k + 0.5) / 10.0);
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    return q;
  };
  const auto snap = [](const std::vector<double>& q, double x) {
    const auto it = std::lower_bound(q.begin(), q.end(), x);
    if (it == q.begin()) return q.front();
    if (it == q.end()) return q.back();
    const double above = *it;
    const double below = *(it - 1);
    return (above - x) < (x - below) ? above : below;
  };
  const auto qt = deciles(theta);
  const auto qh = deciles(h);

  std::map<ModelParams, double> merged;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    merged[{snap(qt, theta[i]), snap(qh, h[i])}] += ps.weights[i];
  }
  ParticleSet out;
  out.day = ps.day;
  out.expert_mass = ps.expert_mass;
  out.nominal_size = ps.nominal_size > 0 ? ps.nominal_size : static_cast<int>(ps.size());
  for (const auto& [p, w] : merged) {
    out.particles.push_back(p);
    out.weights.push_back(w);
  }
  return out;
}

const char* to_string(Stage s) {
  switch (s) {
    case Stage::initialized: return "initialized";
    case Stage::injected: return "injected";
    case Stage::updated: return "updated";
    case Stage::stripped: return "stripped";
    case Stage::rejuvenated: return "rejuvenated";
    case Stage::compressed: return "compressed";
  }
  return "unknown";
}

SequentialResult run_sequential(std::span<const Track> tracks, const PriorProvider& priors, const PfConfig& cfg,
                                const KmScale& scale, std::uint64_t seed, SequentialObserver* observer,
                                const SequentialState* resume, int min_history) {
  cfg.box.validate();
  SequentialResult result;
  if (resume != nullptr) result.state = *resume;
  auto& state = result.state;

  std::map<int, std::vector<std::size_t>> events;
  for (std::size_t g = 0; g < tracks.size(); ++g) {
    for (const auto& [day, loc] : tracks[g].observations) {
      if (!state.initialized || day > state.last_day) events[day].push_back(g);
    }
  }
  const auto notify = [&](Stage s, const ParticleSet& ps) {
    if (observer != nullptr) observer->after_stage(s, ps);
  };

  for (const auto& [day, gangs] : events) {
    for (std::size_t g : gangs) {
      const Track& track = tracks[g];
      if (track.count_before(day) < min_history) continue;
      if (!state.initialized) {
        state.particles = init_particles(cfg.particles, cfg.box, derive_seed(seed, 0, 1));
        state.particles.day = day;
        state.initialized = true;
        notify(Stage::initialized, state.particles);
      }
      std::optional<DailyPrior> prior;
      if (cfg.use_expert_prior && priors) prior = priors(track, day);
      const double p_n = prior ? prior->p_n : 0.0;
      if (observer != nullptr) observer->before_update(track, day, state.particles, prior ? &*prior : nullptr);

      auto ps = inject_expert_mass(state.particles, p_n);
      notify(Stage::injected, ps);
      auto [updated, summary] =
          bayes_update(ps, track, day, prior ? &prior->prior : nullptr, track.at(day), scale, cfg.variant);
      summary = summarize(updated, cfg.credible_mass);
      summary.gang_id = track.gang_id;
      summary.q0_prior = p_n;
      notify(Stage::updated, updated);
      ps = strip_expert(updated);
      notify(Stage::stripped, ps);
      ps = rejuvenate(ps, cfg.box, cfg.smoothing, derive_seed(seed, state.updates + 1, 2));
      notify(Stage::rejuvenated, ps);
      // Credible intervals are read off the smoothed cloud; the compressed atoms only
      // resolve the marginals to deciles.
      const auto smoothed = summarize(ps, cfg.credible_mass);
      summary.theta = smoothed.theta;
      summary.h = smoothed.h;
      ps = restore_spread(decile_compress(ps), ps, cfg.box);
      ps.day = day;
      notify(Stage::compressed, ps);
      state.particles = std::move(ps);
      ++state.updates;
      result.summaries.push_back(summary);
    }
    state.last_day = day;
  }
  return result;
}

}  // namespace gangtrack
