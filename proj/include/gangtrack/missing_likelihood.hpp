#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gangtrack/core_density.hpp"
#include "gangtrack/geo.hpp"

namespace gangtrack {

/// Sparse day-indexed locations of one gang. Day indices are global (shared
/// across gangs); the gang's own series starts at its first observation.
struct Track {
  std::string gang_id;
  std::map<int, GeoPoint> observations;

  bool empty() const { return observations.empty(); }
  int first_day() const;
  int last_day() const;
  /// Number of observations strictly before `day`.
  int count_before(int day) const;
  /// The last k observed locations strictly before `day`, oldest first.
  std::vector<GeoPoint> recent_before(int day, int k) const;
  std::optional<GeoPoint> at(int day) const;
};

/// Missing days u_1 < ... < u_L of a history of n days, in the gang's local
/// indexing (local day 1 is the first observation).
struct MissingPattern {
  int n = 0;
  std::vector<int> missing;

  /// Pattern of local days 1..n where n+1 is the local index of `horizon_day`.
  static MissingPattern from_track(const Track& track, int horizon_day);

  int size() const { return static_cast<int>(missing.size()); }
  bool is_missing(int day) const;
  std::vector<int> observed() const;
  /// S_q = {u_1, ..., u_{q-1}} for q = 1..L+1.
  std::vector<int> prefix_set(int q) const;
};

/// Dense matrices of the matrix-form likelihood; A is n x L, W is L x L, B has
/// length L (1-based indices in the accessors, row-major storage).
struct MissingWeightMatrices {
  int n = 0;
  int L = 0;
  std::vector<double> A;
  std::vector<double> W;
  std::vector<double> B;

  static MissingWeightMatrices build(const MissingPattern& pattern, const DecayWeights& w);

  double a(int p, int q) const { return A[static_cast<std::size_t>((p - 1) * L + (q - 1))]; }
  double w(int p, int q) const { return W[static_cast<std::size_t>((p - 1) * L + (q - 1))]; }
  double b(int p) const { return B[static_cast<std::size_t>(p - 1)]; }
};

/// Coefficients c(m, j) of the conditional density
///   sum_m sum_j c(m, j) k(s - s_j, sqrt(m+1) h)
/// over levels m = 0..L and observed days j (indexed by position in
/// `observed_days`). They depend on theta only, never on h or s.
struct MixtureCoefficients {
  std::vector<int> observed_days;
  int levels = 1;
  std::vector<double> values;  // levels x observed_days.size()

  double at(int m, std::size_t j) const { return values[static_cast<std::size_t>(m) * observed_days.size() + j]; }
  double& at(int m, std::size_t j) { return values[static_cast<std::size_t>(m) * observed_days.size() + j]; }
  double total() const;
};

enum class LikelihoodVariant {
  full,     ///< matrix form, the production path
  partial,  ///< renormalised observed-days-only kernel density
};

/// Snapshot of a track's observed history before a horizon day. Construct
/// once per (track, horizon) and reuse across parameters and evaluation points.
class ConditionalModel {
 public:
  ConditionalModel(const Track& track, int horizon_day);

  const MissingPattern& pattern() const { return pattern_; }
  const std::vector<GeoPoint>& observed_points() const { return points_; }

  /// Explicit enumeration over tuples of missing days; limited to L <= 12.
  MixtureCoefficients coefficients_prop1(double theta) const;
  /// Iterated matrix-vector products v_1 = B, v_{m+1} = W v_m, C^(m) = A v_m.
  MixtureCoefficients coefficients_prop2(double theta) const;
  MixtureCoefficients coefficients_partial(double theta) const;
  MixtureCoefficients coefficients(double theta, LikelihoodVariant v) const;

  GaussianMixture to_mixture(const MixtureCoefficients& c, double h, const KmScale& scale) const;
  /// Log density per square degree at s.
  double log_density(const MixtureCoefficients& c, double h, const GeoPoint& s,
                     const KmScale& scale) const;

 private:
  MissingPattern pattern_;
  std::vector<GeoPoint> points_;  // aligned with pattern_.observed()
  std::vector<int> observed_;
};

GaussianMixture likelihood_prop1(const Track& track, int horizon_day, const ModelParams& params,
                                 const KmScale& scale);
GaussianMixture likelihood_prop2(const Track& track, int horizon_day, const ModelParams& params,
                                 const KmScale& scale);
GaussianMixture likelihood_partial(const Track& track, int horizon_day, const ModelParams& params,
                                   const KmScale& scale);

struct ConsistencyGap {
  double lhs = 0.0;  ///< model density given the observed history, per km²
  double rhs = 0.0;  ///< the same after filling the latest missing day and integrating it out
  double gap = 0.0;
  GeoPoint probe;
};

/// Compares the model's density for the day after the last observation with
/// the integral over the most recent missing day of (model given that day
/// filled) x (model for that day). Returns the worst probe point.
ConsistencyGap consistency_violation_demo(const Track& track, const ModelParams& params,
                                          const KmScale& scale, LikelihoodVariant variant);

}  // namespace gangtrack
