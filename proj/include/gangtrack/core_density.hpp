#pragma once

#include <span>
#include <vector>

#include "gangtrack/geo.hpp"

namespace gangtrack {

/// Model parameters: temporal decay theta (days) and bandwidth scale h (km).
struct ModelParams {
  double theta = 1.0;
  double h = 1.0;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
  friend auto operator<=>(const ModelParams&, const ModelParams&) = default;
};

/// Compact support box for ModelParams.
struct ParamBox {
  double theta_min = 1.0;
  double theta_max = 500.0;
  double h_min = 0.5;
  double h_max = 50.0;

  /// Throws InvalidParameter unless both intervals are non-degenerate and h_min > 0.
  void validate() const;
  bool contains(const ModelParams& p) const {
    return p.theta >= theta_min && p.theta <= theta_max && p.h >= h_min && p.h <= h_max;
  }
};

/// Per-axis kernel bandwidth in degrees.
struct Bandwidth {
  double lon = 1.0;
  double lat = 1.0;
};

/// Bivariate product Gaussian kernel, density per square degree.
double kernel2(const Offset& z, const Bandwidth& bw);
double log_kernel2(const Offset& z, const Bandwidth& bw);

/// Normalised exponential time weights, w(i, t) = exp(-(t-i)/theta) / sum_{j<t} exp(-(t-j)/theta).
///
/// Denominators are cached up to `max_target`; the class answers any target
/// beyond that by extending the cache lazily on construction of a new object.
class DecayWeights {
 public:
  DecayWeights(double theta, int max_target);

  double theta() const { return theta_; }
  int max_target() const { return static_cast<int>(log_denominator_.size()) - 1; }

  /// Weight of day i in the forecast for day target; requires 1 <= i < target <= max_target().
  double operator()(int i, int target) const;
  double log_weight(int i, int target) const;

 private:
  double theta_;
  // log_denominator_[t] = log sum_{k=0}^{t-2} exp(-k/theta)
  std::vector<double> log_denominator_;
};

/// Single weight evaluation; throws InvalidParameter when i is outside [1, target-1].
double weight(int i, int target, double theta);

struct MixtureComponent {
  GeoPoint center;
  double scale_mult = 1.0;
  double weight = 1.0;
};

/// A weighted sum of product Gaussian kernels. Component k has per-axis
/// bandwidth scale_mult_k * base_bandwidth_km * (delta_lon, delta_lat).
class GaussianMixture {
 public:
  GaussianMixture(std::vector<MixtureComponent> components, double base_bandwidth_km,
                  const KmScale& scale);

  const std::vector<MixtureComponent>& components() const { return components_; }
  double base_bandwidth_km() const { return base_bandwidth_km_; }
  const KmScale& scale() const { return scale_; }
  Bandwidth bandwidth(const MixtureComponent& c) const {
    return {c.scale_mult * base_bandwidth_km_ * scale_.delta_lon,
            c.scale_mult * base_bandwidth_km_ * scale_.delta_lat};
  }
  double total_weight() const;

 private:
  std::vector<MixtureComponent> components_;
  double base_bandwidth_km_;
  KmScale scale_;
};

/// Density per square degree.
double mixture_eval(const GaussianMixture& m, const GeoPoint& s);
/// Log density per square degree, stable far from every component.
double mixture_log_eval(const GaussianMixture& m, const GeoPoint& s);

/// Weighted kernel density for the next day given a fully observed history
/// (history[0] is day 1).
GaussianMixture full_conditional(std::span<const GeoPoint> history, const ModelParams& params,
                                 const KmScale& scale);

/// Checks int k(s - z, tau1) k(z - c, tau2) dz == k(s - c, sqrt(tau1^2 + tau2^2))
/// by 2-D quadrature at probe points around each centre; returns the worst
/// absolute deviation (per square degree).
double convolution_identity_check(double tau1_km, double tau2_km,
                                  std::span<const GeoPoint> centers, const KmScale& scale);

}  // namespace gangtrack
