#include "gangtrack/missing_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gangtrack/errors.hpp"
#include "gangtrack/quadrature.hpp"

namespace gangtrack {

int Track::first_day() const {
  if (observations.empty()) throw EmptyHistory("track " + gang_id + " has no observations");
  return observations.begin()->first;
}

int Track::last_day() const {
  if (observations.empty()) throw EmptyHistory("track " + gang_id + " has no observations");
  return observations.rbegin()->first;
}

int Track::count_before(int day) const {
  return static_cast<int>(std::distance(observations.begin(), observations.lower_bound(day)));
}

std::vector<GeoPoint> Track::recent_before(int day, int k) const {
  std::vector<GeoPoint> out;
  for (auto it = observations.lower_bound(day); it != observations.begin() && static_cast<int>(out.size()) < k;) {
    --it;
    out.push_back(it->second);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<GeoPoint> Track::at(int day) const {
  const auto it = observations.find(day);
  if (it == observations.end()) return std::nullopt;
  return it->second;
}

MissingPattern MissingPattern::from_track(const Track& track, int horizon_day) {
  if (track.count_before(horizon_day) == 0) {
    throw EmptyHistory("no observation of " + track.gang_id + " before day " + std::to_string(horizon_day));
  }
  const int origin = track.first_day();
  MissingPattern p;
  p.n = horizon_day - origin;
  for (int local = 1; local <= p.n; ++local) {
    if (!track.observations.contains(origin + local - 1)) p.missing.push_back(local);
  }
  return p;
}

bool MissingPattern::is_missing(int day) const {
  return std::binary_search(missing.begin(), missing.end(), day);
}

std::vector<int> MissingPattern::observed() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n - size()));
  auto it = missing.begin();
  for (int d = 1; d <= n; ++d) {
    if (it != missing.end() && *it == d) {
      ++it;
    } else {
      out.push_back(d);
    }
  }
  return out;
}

std::vector<int> MissingPattern::prefix_set(int q) const {
  if (q < 1 || q > size() + 1) throw InvalidParameter("prefix set index out of range");
  return {missing.begin(), missing.begin() + (q - 1)};
}

MissingWeightMatrices MissingWeightMatrices::build(const MissingPattern& pattern, const DecayWeights& w) {
  MissingWeightMatrices m;
  m.n = pattern.n;
  m.L = pattern.size();
  const auto L = static_cast<std::size_t>(m.L);
  m.A.assign(static_cast<std::size_t>(m.n) * L, 0.0);
  m.W.assign(L * L, 0.0);
  m.B.assign(L, 0.0);
  for (int q = 1; q <= m.L; ++q) {
    const int uq = pattern.missing[static_cast<std::size_t>(q - 1)];
    // (1:u_q-1) \ S_q: every earlier day that is not one of u_1..u_{q-1},
    // i.e. the observed days before u_q.
    for (int p = 1; p < uq; ++p) {
      if (!pattern.is_missing(p)) m.A[static_cast<std::size_t>((p - 1) * m.L + (q - 1))] = w(p, uq);
    }
    for (int p = 1; p < q; ++p) {
      m.W[static_cast<std::size_t>((p - 1) * m.L + (q - 1))] =
          w(pattern.missing[static_cast<std::size_t>(p - 1)], uq);
    }
    m.B[static_cast<std::size_t>(q - 1)] = w(uq, pattern.n + 1);
  }
  return m;
}

double MixtureCoefficients::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

ConditionalModel::ConditionalModel(const Track& track, int horizon_day)
    : pattern_(MissingPattern::from_track(track, horizon_day)) {
  observed_ = pattern_.observed();
  const int origin = track.first_day();
  points_.reserve(observed_.size());
  for (int d : observed_) points_.push_back(track.observations.at(origin + d - 1));
}

namespace {

MixtureCoefficients empty_coefficients(const std::vector<int>& observed, int levels) {
  MixtureCoefficients c;
  c.observed_days = observed;
  c.levels = levels;
  c.values.assign(static_cast<std::size_t>(levels) * observed.size(), 0.0);
  return c;
}

}  // namespace

MixtureCoefficients ConditionalModel::coefficients_prop1(double theta) const {
  const int n = pattern_.n;
  const int L = pattern_.size();
  if (L > 12) throw InvalidParameter("tuple enumeration is limited to 12 missing days");
  const DecayWeights w(theta, n + 1);
  auto c = empty_coefficients(observed_, L + 1);
  for (std::size_t j = 0; j < observed_.size(); ++j) c.at(0, j) = w(observed_[j], n + 1);

  const auto& u = pattern_.missing;
  std::vector<int> tuple;
  for (std::uint32_t mask = 1; mask < (1u << L); ++mask) {
    tuple.clear();
    for (int k = 0; k < L; ++k) {
      if (mask & (1u << k)) tuple.push_back(k);
    }
    const int m = static_cast<int>(tuple.size());
    double chain = w(u[static_cast<std::size_t>(tuple.back())], n + 1);
    for (int k = 0; k + 1 < m; ++k) {
      chain *= w(u[static_cast<std::size_t>(tuple[k])], u[static_cast<std::size_t>(tuple[k + 1])]);
    }
    const int first = u[static_cast<std::size_t>(tuple.front())];
    // j in (1:u_{i1}-1) \ S_{i1}: observed days before the first missing day of the tuple.
    for (std::size_t j = 0; j < observed_.size() && observed_[j] < first; ++j) {
      c.at(m, j) += chain * w(observed_[j], first);
    }
  }
  return c;
}

MixtureCoefficients ConditionalModel::coefficients_prop2(double theta) const {
  const int n = pattern_.n;
  const int L = pattern_.size();
  const DecayWeights w(theta, n + 1);
  auto c = empty_coefficients(observed_, L + 1);
  for (std::size_t j = 0; j < observed_.size(); ++j) c.at(0, j) = w(observed_[j], n + 1);
  if (L == 0) return c;

  const auto mats = MissingWeightMatrices::build(pattern_, w);
  std::vector<double> v = mats.B;
  std::vector<double> next(v.size());
  for (int m = 1; m <= L; ++m) {
    // C^(m) = A v_m, restricted to observed rows (all other rows of A are zero).
    for (std::size_t j = 0; j < observed_.size(); ++j) {
      const int p = observed_[j];
      const double* row = &mats.A[static_cast<std::size_t>((p - 1) * L)];
      double acc = 0.0;
      for (int q = 0; q < L; ++q) acc += row[q] * v[static_cast<std::size_t>(q)];
      c.at(m, j) = acc;
    }
    if (m == L) break;
    // v_{m+1} = W v_m; W is strictly upper triangular.
    for (int p = 0; p < L; ++p) {
      const double* row = &mats.W[static_cast<std::size_t>(p * L)];
      double acc = 0.0;
      for (int q = p + 1; q < L; ++q) acc += row[q] * v[static_cast<std::size_t>(q)];
      next[static_cast<std::size_t>(p)] = acc;
    }
    v.swap(next);
  }
  return c;
}

MixtureCoefficients ConditionalModel::coefficients_partial(double theta) const {
  const int n = pattern_.n;
  const DecayWeights w(theta, n + 1);
  auto c = empty_coefficients(observed_, 1);
  // Normalise in log space relative to the most recent observed day.
  const double top = w.log_weight(observed_.back(), n + 1);
  double total = 0.0;
  for (std::size_t j = 0; j < observed_.size(); ++j) {
    c.at(0, j) = std::exp(w.log_weight(observed_[j], n + 1) - top);
    total += c.at(0, j);
  }
  for (double& v : c.values) v /= total;
  return c;
}

MixtureCoefficients ConditionalModel::coefficients(double theta, LikelihoodVariant v) const {
  // Without missing days the two models coincide; share one code path so they agree to the bit.
  if (v == LikelihoodVariant::partial && pattern_.size() > 0) return coefficients_partial(theta);
  return coefficients_prop2(theta);
}

GaussianMixture ConditionalModel::to_mixture(const MixtureCoefficients& c, double h,
                                             const KmScale& scale) const {
  std::vector<MixtureComponent> comps;
  for (int m = 0; m < c.levels; ++m) {
    for (std::size_t j = 0; j < points_.size(); ++j) {
      const double cw = c.at(m, j);
      if (cw > 0.0) comps.push_back({points_[j], std::sqrt(static_cast<double>(m + 1)), cw});
    }
  }
  return GaussianMixture(std::move(comps), h, scale);
}

double ConditionalModel::log_density(const MixtureCoefficients& c, double h, const GeoPoint& s,
                                     const KmScale& scale) const {
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  const double h2 = h * h;
  const double log_norm0 = -kLogTwoPi - std::log(h2 * scale.deg2_per_km2());
  thread_local std::vector<double> r2;
  r2.resize(points_.size());
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const double dx = scale.east_km(s.lon - points_[j].lon);
    const double dy = scale.north_km(s.lat - points_[j].lat);
    r2[j] = dx * dx + dy * dy;
  }
  double linear = 0.0;
  for (int m = 0; m < c.levels; ++m) {
    const double k = static_cast<double>(m + 1);
    double level = 0.0;
    for (std::size_t j = 0; j < points_.size(); ++j) {
      const double cw = c.at(m, j);
      if (cw > 0.0) level += cw * std::exp(-r2[j] / (2.0 * k * h2));
    }
    linear += level / k;
  }
  if (linear > 1e-250) return log_norm0 + std::log(linear);

  // Far from every component: redo the sum with a max shift.
  double best = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < c.levels; ++m) {
    const double k = static_cast<double>(m + 1);
    for (std::size_t j = 0; j < points_.size(); ++j) {
      const double cw = c.at(m, j);
      if (cw > 0.0) best = std::max(best, std::log(cw / k) - r2[j] / (2.0 * k * h2));
    }
  }
  if (best == -std::numeric_limits<double>::infinity()) return best;
  double acc = 0.0;
  for (int m = 0; m < c.levels; ++m) {
    const double k = static_cast<double>(m + 1);
    for (std::size_t j = 0; j < points_.size(); ++j) {
      const double cw = c.at(m, j);
      if (cw > 0.0) acc += std::exp(std::log(cw / k) - r2[j] / (2.0 * k * h2) - best);
    }
  }
  return log_norm0 + best + std::log(acc);
}

GaussianMixture likelihood_prop1(const Track& track, int horizon_day, const ModelParams& params,
                                 const KmScale& scale) {
  const ConditionalModel model(track, horizon_day);
  return model.to_mixture(model.coefficients_prop1(params.theta), params.h, scale);
}

GaussianMixture likelihood_prop2(const Track& track, int horizon_day, const ModelParams& params,
                                 const KmScale& scale) {
  const ConditionalModel model(track, horizon_day);
  return model.to_mixture(model.coefficients_prop2(params.theta), params.h, scale);
}

GaussianMixture likelihood_partial(const Track& track, int horizon_day, const ModelParams& params,
                                   const KmScale& scale) {
  const ConditionalModel model(track, horizon_day);
  return model.to_mixture(model.coefficients_partial(params.theta), params.h, scale);
}

ConsistencyGap consistency_violation_demo(const Track& track, const ModelParams& params,
                                          const KmScale& scale, LikelihoodVariant variant) {
  const int horizon = track.last_day() + 1;
  const ConditionalModel model(track, horizon);
  const auto coeffs = model.coefficients(params.theta, variant);
  const double to_km2 = scale.deg2_per_km2();
  const auto density_km2 = [&](const ConditionalModel& cm, const MixtureCoefficients& c, const GeoPoint& s) {
    return std::exp(cm.log_density(c, params.h, s, scale)) * to_km2;
  };

  std::vector<GeoPoint> probes = model.observed_points();
  const GeoPoint last = probes.back();
  const double dlon = params.h * scale.delta_lon;
  const double dlat = params.h * scale.delta_lat;
  for (const auto& o : {std::pair{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}, {2.0, -1.0}}) {
    probes.push_back({last.lon + o.first * dlon, last.lat + o.second * dlat});
  }

  ConsistencyGap worst;
  const auto& pattern = model.pattern();
  if (pattern.size() == 0) {
    for (const auto& s : probes) {
      const double v = density_km2(model, coeffs, s);
      if (worst.gap == 0.0) worst = {v, v, 0.0, s};
    }
    return worst;
  }

  // Fill the most recent missing day with a free location z.
  const int origin = track.first_day();
  const int filled_day = origin + pattern.missing.back() - 1;
  const ConditionalModel before(track, filled_day);
  const auto coeffs_before = before.coefficients(params.theta, variant);

  Track filled = track;
  const GeoPoint placeholder = last;
  filled.observations[filled_day] = placeholder;
  const ConditionalModel after(filled, horizon);
  const auto coeffs_after = after.coefficients(params.theta, variant);
  const auto& after_days = after.pattern().observed();
  const auto z_index = static_cast<std::size_t>(
      std::find(after_days.begin(), after_days.end(), pattern.missing.back()) - after_days.begin());
  const auto& after_points = after.observed_points();

  const auto kernel_at = [&](const GeoPoint& s, const GeoPoint& centre, double mult) {
    return kernel2(s - centre, {mult * dlon, mult * dlat});
  };

  // Integration box: observed hull padded by eight of the widest bandwidths.
  double lon0 = last.lon, lon1 = last.lon, lat0 = last.lat, lat1 = last.lat;
  for (const auto& p : probes) {
    lon0 = std::min(lon0, p.lon); lon1 = std::max(lon1, p.lon);
    lat0 = std::min(lat0, p.lat); lat1 = std::max(lat1, p.lat);
  }
  const double pad = 8.0 * std::sqrt(static_cast<double>(pattern.size() + 1));
  const Rect box{lon0 - pad * dlon, lon1 + pad * dlon, lat0 - pad * dlat, lat1 + pad * dlat};
  const double span = std::max((box.x1 - box.x0) / dlon, (box.y1 - box.y0) / dlat);
  const auto n0 = static_cast<std::size_t>(std::ceil(2.0 * span)) + 1;

  for (const auto& s : probes) {
    const double lhs = density_km2(model, coeffs, s);
    // Part of the filled-history density that does not involve z.
    double fixed = 0.0;
    for (int m = 0; m < coeffs_after.levels; ++m) {
      for (std::size_t j = 0; j < after_points.size(); ++j) {
        if (j == z_index) continue;
        fixed += coeffs_after.at(m, j) * kernel_at(s, after_points[j], std::sqrt(m + 1.0));
      }
    }
    const auto integrand = [&](double x, double y) {
      const GeoPoint z{x, y};
      double moving = 0.0;
      for (int m = 0; m < coeffs_after.levels; ++m) {
        const double cz = coeffs_after.at(m, z_index);
        if (cz > 0.0) moving += cz * kernel_at(s, z, std::sqrt(m + 1.0));
      }
      return (fixed + moving) * std::exp(before.log_density(coeffs_before, params.h, z, scale));
    };
    const double tol = 1e-12 * std::max(lhs / to_km2, 1.0);
    const auto q = adaptive_trapezoid_2d(integrand, box, n0, tol, 2049);
    const double rhs = q.value * to_km2;
    const double gap = std::fabs(lhs - rhs);
    if (gap >= worst.gap) worst = {lhs, rhs, gap, s};
  }
  return worst;
}

}  // namespace gangtrack
