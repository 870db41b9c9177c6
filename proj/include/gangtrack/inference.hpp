#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gangtrack/core_density.hpp"
#include "gangtrack/geo_prior.hpp"
#include "gangtrack/missing_likelihood.hpp"

namespace gangtrack {

/// Weighted ensemble over ModelParams plus an analytic point mass on the
/// expert marker. Invariant: expert_mass + sum(weights) == 1.
struct ParticleSet {
  std::vector<ModelParams> particles;
  std::vector<double> weights;
  double expert_mass = 0.0;
  int day = 0;
  /// Number of particles drawn at initialisation and at every rejuvenation;
  /// `particles` may hold fewer entries after coincident values are merged.
  int nominal_size = 0;

  std::size_t size() const { return particles.size(); }
  double total_mass() const;
};

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct PosteriorSummary {
  int day = 0;
  std::string gang_id;
  Interval theta;
  Interval h;
  double q0_prior = 0.0;
  double q0_posterior = 0.0;
};

/// Particle-filter settings; defaults cover the support box of the model.
struct PfConfig {
  int particles = 1000;
  ParamBox box{};
  /// Beta-kernel spread as a fraction of the weighted particle sd; kernel centres are
  /// shrunk toward the mean by sqrt(1 - smoothing^2) so the mixture keeps the sd.
  double smoothing = 0.7;
  LikelihoodVariant variant = LikelihoodVariant::full;
  bool use_expert_prior = true;
  double credible_mass = 0.95;
};

/// Flat prior draws over the box; uniform weights, no expert mass.
ParticleSet init_particles(int n, const ParamBox& box, std::uint64_t seed);

/// Puts mass p_n on the expert marker and scales the particle weights to 1 - p_n.
ParticleSet inject_expert_mass(const ParticleSet& ps, double p_n);

/// Weighted mean and equal-tailed credible interval of each parameter.
PosteriorSummary summarize(const ParticleSet& ps, double credible_mass = 0.95);

/// Multiplies each weight by the particle's likelihood of the day's location
/// and the expert mass by the expert map at that location, then renormalises.
/// Without an observation the set is returned unchanged. Likelihoods are per
/// km² so that they are commensurate with the expert map.
std::pair<ParticleSet, PosteriorSummary> bayes_update(const ParticleSet& ps, const Track& track, int day,
                                                      const ExpertPrior* expert_prior,
                                                      const std::optional<GeoPoint>& observed,
                                                      const KmScale& scale,
                                                      LikelihoodVariant variant = LikelihoodVariant::full);

/// Restricts the posterior to model parameters.
ParticleSet strip_expert(const ParticleSet& ps);

/// Beta shapes (a, b) with the given mean and sd on [0, 1]. The sd is clamped
/// to 0.99 sqrt(m(1-m)) so both shapes stay positive.
std::pair<double, double> beta_shapes(double mean, double sd);

/// Draws a fresh equally weighted sample from a beta-kernel smoothing of the
/// weighted particles (per-particle kernels on the box-normalised scale).
/// Sets with fewer than two distinct values of either parameter pass through.
ParticleSet rejuvenate(const ParticleSet& ps, const ParamBox& box, double smoothing, std::uint64_t seed);

/// Weighted quantile: smallest value whose cumulative weight reaches prob.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double prob);

/// Snaps both parameters to the nearest of ten mid-decile values of their
/// weighted marginals and merges coincident particles.
ParticleSet decile_compress(const ParticleSet& ps);

/// Affinely moves the compressed values so each marginal regains the weighted mean and
/// sd of `reference`; values stay inside the box and coincident particles merge.
ParticleSet restore_spread(const ParticleSet& compressed, const ParticleSet& reference, const ParamBox& box);

/// Expert map for one gang on one day together with its credibility weight.
struct DailyPrior {
  ExpertPrior prior;
  double p_n = 0.0;
};

/// Supplies the expert map for (track, day), or nullopt for no expert input.
using PriorProvider = std::function<std::optional<DailyPrior>(const Track&, int day)>;

enum class Stage { initialized, injected, updated, stripped, rejuvenated, compressed };
const char* to_string(Stage s);

/// Hooks into the sequential run; every method has a no-op default.
class SequentialObserver {
 public:
  virtual ~SequentialObserver() = default;
  /// Called before a gang's update, with the particle set that represents the
  /// parameter prior for that day.
  virtual void before_update(const Track&, int /*day*/, const ParticleSet&, const DailyPrior*) {}
  virtual void after_stage(Stage, const ParticleSet&) {}
};

/// Resumable state of a sequential run.
struct SequentialState {
  ParticleSet particles;
  bool initialized = false;
  std::int64_t updates = 0;  ///< number of completed updates, used to derive per-update seeds
  int last_day = 0;          ///< last day fully processed
};

struct SequentialResult {
  std::vector<PosteriorSummary> summaries;
  SequentialState state;
};

/// Runs the daily filter over all tracks with shared parameters. Gangs seen on
/// the same day are processed one at a time in input order; a gang is used
/// once it has at least `min_history` earlier observations.
SequentialResult run_sequential(std::span<const Track> tracks, const PriorProvider& priors, const PfConfig& cfg,
                                const KmScale& scale, std::uint64_t seed, SequentialObserver* observer = nullptr,
                                const SequentialState* resume = nullptr, int min_history = 3);

/// Seed of the update with the given ordinal; a pure function of its inputs.
std::uint64_t derive_seed(std::uint64_t seed, std::int64_t ordinal, std::uint64_t stream);

}  // namespace gangtrack
