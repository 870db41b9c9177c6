#pragma once

#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gangtrack/geo_prior.hpp"
#include "gangtrack/inference.hpp"
#include "gangtrack/missing_likelihood.hpp"

namespace gangtrack {

/// Predictive density of a gang's location on a grid, per km².
struct PredictiveDensity {
  Grid grid;
  std::vector<double> values;       ///< renormalised blend
  std::vector<double> blend;        ///< (1-p) data_part + p expert_part, before renormalisation
  std::vector<double> data_part;    ///< particle-averaged model density
  std::vector<double> expert_part;  ///< expert map (zeros when absent)
  double p_n = 0.0;
  int day = 0;
  std::string gang_id;

  double mass() const;
};

/// Adds weight * model density (per km²) at every cell centre to `out`.
void accumulate_model_density(const ConditionalModel& model, const MixtureCoefficients& coeffs, double h,
                              double weight, const Grid& grid, std::vector<double>& out);

/// Blends the particle-averaged model density for `day` (given the track's
/// history before that day) with the expert map, then renormalises over the grid.
PredictiveDensity predictive_density(const ParticleSet& ps, const Track& track, int day,
                                     const ExpertPrior* expert_prior, double p_n, const Grid& grid,
                                     LikelihoodVariant variant = LikelihoodVariant::full);

/// Required area to monitor (km²): area of cells at least as dense as the
/// cell containing `actual`.
double ram(const PredictiveDensity& pd, const GeoPoint& actual);

/// Cell indices by (density desc, row, col).
std::vector<std::size_t> ranked_cells(const PredictiveDensity& pd);

struct ProximityCurve {
  std::vector<double> p;
  std::vector<double> m_km;
};

/// Fractions 0.01, 0.02, ..., 1.00.
std::vector<double> default_p_grid();

/// For each fraction p, the smallest distance (km) from `actual` to a cell in
/// the top ceil(p * cells). The cell containing `actual` counts as distance 0;
/// other cells are measured from their centres.
ProximityCurve proximity_curve(const PredictiveDensity& pd, const GeoPoint& actual, std::span<const double> p_grid);

/// Trapezoid area under m(p), divided by the width of the sampled p range.
double aupc(const ProximityCurve& curve);

/// Per cell: 0 for the top band (cumulative area <= first limit), 1 for the
/// next band, -1 otherwise.
std::vector<int> top_area_bands(const PredictiveDensity& pd, std::span<const double> area_limits_km2);

void write_svg_heatmap(std::ostream& os, const PredictiveDensity& pd, const GeoPoint* actual = nullptr);

struct AssessmentRecord {
  std::string gang_id;
  int instance = 0;
  int day = 0;
  double ram_km2 = 0.0;
  double aupc_km = 0.0;
  std::string variant;
};

struct GangComparison {
  std::string gang_id;
  int instances = 0;
  double ram_better_pct = 0.0;
  double ram_at_least_pct = 0.0;
  double aupc_better_pct = 0.0;
  double aupc_at_least_pct = 0.0;
  /// Entry k: % of instances k..last (0-based) where variant A is strictly better.
  std::vector<double> trailing_ram_better_pct;
  std::vector<double> trailing_aupc_better_pct;
};

/// Compares variant `a` against `b` instance by instance (smaller metrics win).
/// Throws AlignmentError when the two variants do not cover the same instances.
std::vector<GangComparison> compare_variants(std::span<const AssessmentRecord> records, const std::string& a,
                                             const std::string& b);

}  // namespace gangtrack
