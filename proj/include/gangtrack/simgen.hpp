#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gangtrack/inference.hpp"
#include "gangtrack/missing_likelihood.hpp"

namespace gangtrack {

struct SimConfig {
  int n = 200;
  double theta_true = 4.0;
  double h_true = 1.0;
  double missing_frac = 0.4;
  std::uint64_t seed = 1;
  GeoPoint center{85.3, 23.6};
  /// Standard deviation (km, per axis) of the day-1 location around `center`.
  double spread_km = 5.0;
  KmScale scale = KmScale::at_latitude(23.6);
  std::string gang_id = "SIM";
  int first_day = 1;

  /// Throws InvalidParameter for n < 2, non-positive parameters or a missing
  /// fraction outside [0, 1).
  void validate() const;
};

/// Draws days first_day .. first_day+n-1 from the full weighted kernel model.
Track simulate_track(const SimConfig& cfg);

/// Removes floor(missing_frac * (n-1)) uniformly chosen days, never the first.
Track mask_track(const Track& track, double missing_frac, std::uint64_t seed);

struct StudySeries {
  LikelihoodVariant variant = LikelihoodVariant::full;
  std::vector<PosteriorSummary> updates;
};

struct SimResult {
  Track full;
  Track masked;
  std::vector<StudySeries> series;
  double wall_seconds = 0.0;
};

/// Fits the masked track sequentially, once per likelihood variant, without
/// any expert prior.
SimResult run_study(const SimConfig& cfg, std::span<const LikelihoodVariant> variants, const PfConfig& pf);

/// True when both credible intervals of a summary contain the true values.
bool covers(const PosteriorSummary& s, double theta_true, double h_true);

}  // namespace gangtrack
