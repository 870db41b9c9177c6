#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gangtrack/geo.hpp"

namespace gangtrack {

/// Regular grid of square cells, cell_km on a side, row 0 at the southern edge.
class Grid {
 public:
  Grid(GeoPoint south_west, int rows, int cols, double cell_km, const KmScale& scale);
  /// Smallest grid anchored at the box's south-west corner whose cells cover the box.
  static Grid covering(const BoundingBox& box, double cell_km, const KmScale& scale);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_); }
  double cell_km() const { return cell_km_; }
  double cell_area() const { return cell_km_ * cell_km_; }
  const KmScale& scale() const { return scale_; }
  BoundingBox bounds() const;

  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(col); }
  int row_of(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(cols_)); }
  int col_of(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(cols_)); }
  GeoPoint center(std::size_t idx) const { return center(row_of(idx), col_of(idx)); }
  GeoPoint center(int row, int col) const;
  /// Cell containing p, or nullopt when p lies outside the grid.
  std::optional<std::size_t> cell_of(const GeoPoint& p) const;
  /// As cell_of, throwing OutOfRegion instead.
  std::size_t require_cell(const GeoPoint& p) const;

 private:
  GeoPoint origin_;
  int rows_;
  int cols_;
  double cell_km_;
  KmScale scale_;
};

/// Forest density per grid cell, values in [0, 1].
struct ForestRaster {
  std::vector<double> density;

  /// Throws InvalidParameter when the shape or values do not fit the grid.
  void validate(const Grid& grid) const;
};

using CampSet = std::vector<GeoPoint>;

struct IntelInput {
  GeoPoint location;
  int received_day = 1;
};

/// Thresholds of the expert-prior rules and the credibility weights.
struct PriorConfig {
  double forest_threshold = 0.5;
  double camp_km = 3.0;
  double buffer_km = 10.0;
  double intel_radius_km = 10.0;
  int intel_fresh_days = 10;
  int k0 = 3;
  double p_with_intel = 0.5;
  double p_without_intel = 0.1;
};

struct ExpertPrior {
  Grid grid;
  std::vector<double> density;     ///< per km²
  std::vector<bool> support_mask;  ///< cells with positive density
  std::vector<int> raw_levels;     ///< marking level before normalisation, 0..3
  bool intel_fresh = false;        ///< at least one fresh intel input entered the map
  bool fallback = false;           ///< no cell was marked; density is uniform over a fallback set

  /// Density (per km²) of the cell containing p; OutOfRegion outside the grid.
  double at(const GeoPoint& p) const { return density[grid.require_cell(p)]; }
  double mass() const;
};

/// Distance (km) from p to the convex hull of pts; zero inside.
double distance_to_hull_km(std::span<const GeoPoint> pts, const GeoPoint& p, const KmScale& scale);

/// Cells whose centres lie within buffer_km of the convex hull of `recent`.
std::vector<bool> extended_hull_mask(std::span<const GeoPoint> recent, double buffer_km, const Grid& grid);

/// Intel inputs at most cfg.intel_fresh_days old on `today`, most recent first.
std::vector<IntelInput> fresh_intel(std::span<const IntelInput> intel, int today, const PriorConfig& cfg);

/// Builds the daily expert map from forest density, camp proximity, the
/// extended hull of recent sightings and fresh intelligence.
ExpertPrior build_expert_prior(const Grid& grid, const ForestRaster& forest, const CampSet& camps,
                               std::span<const GeoPoint> recent, std::span<const IntelInput> intel,
                               int today, const PriorConfig& cfg = {});

/// Prior probability on the expert marker.
double prior_credibility(bool intel_fresh, const PriorConfig& cfg = {});

}  // namespace gangtrack
