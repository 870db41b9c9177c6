#include "gangtrack/simgen.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "gangtrack/errors.hpp"
#include "gangtrack/random.hpp"

namespace gangtrack {

void SimConfig::validate() const {
  if (n < 2) throw InvalidParameter("simulation needs at least two days");
  if (!(theta_true > 0.0) || !(h_true > 0.0)) throw InvalidParameter("true parameters must be positive");
  if (!(missing_frac >= 0.0 && missing_frac < 1.0)) throw InvalidParameter("missing_frac must lie in [0, 1)");
  if (!(spread_km > 0.0)) throw InvalidParameter("initial spread must be positive");
}

Track simulate_track(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const DecayWeights w(cfg.theta_true, cfg.n + 1);
  std::vector<GeoPoint> s;
  s.reserve(static_cast<std::size_t>(cfg.n));
  s.push_back({cfg.center.lon + cfg.spread_km * cfg.scale.delta_lon * rng.normal(),
               cfg.center.lat + cfg.spread_km * cfg.scale.delta_lat * rng.normal()});
  std::vector<double> cdf;
  for (int k = 1; k < cfg.n; ++k) {
    // Day k+1 given days 1..k: pick a past day by weight, then jitter.
    cdf.resize(static_cast<std::size_t>(k));
    double acc = 0.0;
    for (int i = 1; i <= k; ++i) {
      acc += w(i, k + 1);
      cdf[static_cast<std::size_t>(i - 1)] = acc;
    }
    const double u = rng.uniform() * acc;
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    idx = std::min(idx, cdf.size() - 1);
    const GeoPoint base = s[idx];
    s.push_back({base.lon + cfg.h_true * cfg.scale.delta_lon * rng.normal(),
                 base.lat + cfg.h_true * cfg.scale.delta_lat * rng.normal()});
  }
  Track t;
  t.gang_id = cfg.gang_id;
  for (int k = 0; k < cfg.n; ++k) t.observations[cfg.first_day + k] = s[static_cast<std::size_t>(k)];
  return t;
}

Track mask_track(const Track& track, double missing_frac, std::uint64_t seed) {
  if (!(missing_frac >= 0.0 && missing_frac < 1.0)) throw InvalidParameter("missing_frac must lie in [0, 1)");
  if (track.empty()) return track;
  std::vector<int> days;
  for (const auto& [d, _] : track.observations) days.push_back(d);
  const auto removable = days.size() - 1;
  const auto k = static_cast<std::size_t>(missing_frac * static_cast<double>(removable));
  // Partial Fisher-Yates over days after the first.
  Rng rng(seed);
  std::vector<int> pool(days.begin() + 1, days.end());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  Track out = track;
  for (std::size_t i = 0; i < k; ++i) out.observations.erase(pool[i]);
  return out;
}

SimResult run_study(const SimConfig& cfg, std::span<const LikelihoodVariant> variants, const PfConfig& pf) {
  const auto start = std::chrono::steady_clock::now();
  SimResult result;
  result.full = simulate_track(cfg);
  result.masked = mask_track(result.full, cfg.missing_frac, derive_seed(cfg.seed, 0, 7));
  PfConfig run_cfg = pf;
  run_cfg.use_expert_prior = false;
  const Track tracks[] = {result.masked};
  for (const auto variant : variants) {
    run_cfg.variant = variant;
    auto run = run_sequential(tracks, nullptr, run_cfg, cfg.scale, derive_seed(cfg.seed, 0, 11));
    result.series.push_back({variant, std::move(run.summaries)});
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

bool covers(const PosteriorSummary& s, double theta_true, double h_true) {
  return s.theta.lo <= theta_true && theta_true <= s.theta.hi && s.h.lo <= h_true && h_true <= s.h.hi;
}

}  // namespace gangtrack
