#include "gangtrack/core_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gangtrack/errors.hpp"
#include "gangtrack/quadrature.hpp"

namespace gangtrack {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_sum_exp_step(double acc, double x) {
  if (x == -std::numeric_limits<double>::infinity()) return acc;
  if (acc == -std::numeric_limits<double>::infinity()) return x;
  return acc > x ? acc + std::log1p(std::exp(x - acc)) : x + std::log1p(std::exp(acc - x));
}

}  // namespace

void ParamBox::validate() const {
  if (!(theta_min > 0.0 && theta_max > theta_min && h_min > 0.0 && h_max > h_min) ||
      !std::isfinite(theta_max) || !std::isfinite(h_max)) {
    throw InvalidParameter("parameter box must satisfy 0 < theta_min < theta_max and 0 < h_min < h_max");
  }
}

double log_kernel2(const Offset& z, const Bandwidth& bw) {
  if (!(bw.lon > 0.0) || !(bw.lat > 0.0)) throw InvalidParameter("kernel bandwidth must be positive");
  const double u = z.dlon / bw.lon;
  const double v = z.dlat / bw.lat;
  return -kLogTwoPi - std::log(bw.lon) - std::log(bw.lat) - 0.5 * (u * u + v * v);
}

double kernel2(const Offset& z, const Bandwidth& bw) { return std::exp(log_kernel2(z, bw)); }

DecayWeights::DecayWeights(double theta, int max_target) : theta_(theta) {
  if (!(theta > 0.0)) throw InvalidParameter("theta must be positive");
  if (max_target < 2) max_target = 2;
  log_denominator_.assign(static_cast<std::size_t>(max_target) + 1, 0.0);
  // Running log-sum of exp(-k/theta), k = 0..t-2; the k = 0 term is 1 so the
  // denominator never underflows however small theta is.
  double acc = -std::numeric_limits<double>::infinity();
  for (int t = 2; t <= max_target; ++t) {
    acc = log_sum_exp_step(acc, -static_cast<double>(t - 2) / theta);
    log_denominator_[static_cast<std::size_t>(t)] = acc;
  }
}

double DecayWeights::log_weight(int i, int target) const {
  if (target < 2 || target > max_target() || i < 1 || i >= target) {
    throw InvalidParameter("weight index out of range: i=" + std::to_string(i) +
                           " target=" + std::to_string(target));
  }
  return -static_cast<double>(target - 1 - i) / theta_ -
         log_denominator_[static_cast<std::size_t>(target)];
}

double DecayWeights::operator()(int i, int target) const { return std::exp(log_weight(i, target)); }

double weight(int i, int target, double theta) {
  return DecayWeights(theta, std::max(target, 2))(i, target);
}

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components,
                                 double base_bandwidth_km, const KmScale& scale)
    : components_(std::move(components)), base_bandwidth_km_(base_bandwidth_km), scale_(scale) {
  if (!(base_bandwidth_km > 0.0)) throw InvalidParameter("base bandwidth must be positive");
  if (components_.empty()) throw EmptyHistory("mixture has no components");
  for (const auto& c : components_) {
    if (!(c.weight > 0.0) || !(c.scale_mult >= 1.0)) {
      throw InvalidParameter("mixture components need positive weight and scale_mult >= 1");
    }
  }
  if (std::fabs(total_weight() - 1.0) > 1e-9) throw InvalidParameter("mixture weights must sum to 1");
}

double GaussianMixture::total_weight() const {
  double s = 0.0;
  for (const auto& c : components_) s += c.weight;
  return s;
}

double mixture_eval(const GaussianMixture& m, const GeoPoint& s) {
  double total = 0.0;
  for (const auto& c : m.components()) total += c.weight * kernel2(s - c.center, m.bandwidth(c));
  return total;
}

double mixture_log_eval(const GaussianMixture& m, const GeoPoint& s) {
  double acc = -std::numeric_limits<double>::infinity();
  for (const auto& c : m.components()) {
    acc = log_sum_exp_step(acc, std::log(c.weight) + log_kernel2(s - c.center, m.bandwidth(c)));
  }
  return acc;
}

GaussianMixture full_conditional(std::span<const GeoPoint> history, const ModelParams& params,
                                 const KmScale& scale) {
  if (history.empty()) throw EmptyHistory("full conditional needs at least one past location");
  const int n = static_cast<int>(history.size());
  const DecayWeights w(params.theta, n + 1);
  std::vector<MixtureComponent> comps;
  comps.reserve(history.size());
  for (int i = 1; i <= n; ++i) {
    const double wi = w(i, n + 1);
    if (wi > 0.0) comps.push_back({history[static_cast<std::size_t>(i - 1)], 1.0, wi});
  }
  return GaussianMixture(std::move(comps), params.h, scale);
}

double convolution_identity_check(double tau1_km, double tau2_km,
                                  std::span<const GeoPoint> centers, const KmScale& scale) {
  if (!(tau1_km > 0.0) || !(tau2_km > 0.0)) throw InvalidParameter("tau must be positive");
  const Bandwidth b1{tau1_km * scale.delta_lon, tau1_km * scale.delta_lat};
  const Bandwidth b2{tau2_km * scale.delta_lon, tau2_km * scale.delta_lat};
  const double tau = std::hypot(tau1_km, tau2_km);
  const Bandwidth bt{tau * scale.delta_lon, tau * scale.delta_lat};

  // The integrand is a Gaussian in z centred between s and c with this spread.
  const double combined = tau1_km * tau2_km / tau;
  const double sx = combined * scale.delta_lon;
  const double sy = combined * scale.delta_lat;
  const double w1 = tau2_km * tau2_km / (tau * tau);

  static constexpr double kProbe[][2] = {{0, 0}, {1, 0}, {0, -1}, {1, 1}, {-2, 1}, {0.5, 2.5}};
  double worst = 0.0;
  for (const auto& c : centers) {
    for (const auto& o : kProbe) {
      const GeoPoint s{c.lon + o[0] * bt.lon, c.lat + o[1] * bt.lat};
      const double mx = w1 * s.lon + (1.0 - w1) * c.lon;
      const double my = w1 * s.lat + (1.0 - w1) * c.lat;
      const Rect box{mx - 12 * sx, mx + 12 * sx, my - 12 * sy, my + 12 * sy};
      const auto integrand = [&](double x, double y) {
        const GeoPoint z{x, y};
        return kernel2(s - z, b1) * kernel2(z - c, b2);
      };
      const double exact = kernel2(s - c, bt);
      const auto q = adaptive_trapezoid_2d(integrand, box, 33, 1e-12 * std::max(exact, 1.0));
      worst = std::max(worst, std::fabs(q.value - exact));
    }
  }
  return worst;
}

}  // namespace gangtrack
